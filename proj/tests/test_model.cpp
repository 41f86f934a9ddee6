#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "docgen/decode.hpp"
#include "docgen/model.hpp"
#include "docgen/model_io.hpp"
#include "docgen/nn/gradcheck.hpp"

using namespace docgen;
using model::ModelParams;
using model::SequenceContext;
using model::StepDistribution;

namespace {

corpus::Example make_example(std::string id, std::string intent, std::string snippet,
                             std::vector<corpus::ApiAnnotation> apis = {}) {
  corpus::Example ex;
  ex.id = std::move(id);
  ex.intent = std::move(intent);
  ex.snippet = std::move(snippet);
  ex.snippet_tokens = corpus::tokenize_snippet(ex.snippet);
  ex.apis = std::move(apis);
  return ex;
}

docstore::ApiEntry entry(std::string key, std::string signature, std::string description) {
  docstore::ApiEntry e;
  e.key = std::move(key);
  e.signature = std::move(signature);
  e.description = std::move(description);
  e.library = "lib";
  return e;
}

struct Tiny {
  corpus::Vocabulary vocab;
  model::NlVocab nl;
  model::ModelConfig cfg;
  std::unique_ptr<ModelParams> params;
};

// Small model over a fixed toy vocabulary; dims kept tiny so finite
// differences stay fast.
Tiny make_tiny(std::uint64_t seed, bool strict = false) {
  Tiny t;
  std::vector<corpus::Example> train = {
      make_example("t1", "sort the array", "sort(key, arr)"),
      make_example("t2", "walk the index", "idx.walk(key)"),
      make_example("t3", "quote it", "f('v')"),
  };
  t.vocab = corpus::build_vocabulary(train, 1);
  t.nl = model::NlVocab::build({"sort the array", "walk the index", "quote it",
                                "sorts a sequence", "walks an index tree"});
  t.cfg.nl_embed_dim = 5;
  t.cfg.code_embed_dim = 4;
  t.cfg.output_embed_dim = 4;
  t.cfg.encoder_hidden = 3;
  t.cfg.dropout = 0.0;
  t.cfg.beam_size = 4;
  t.cfg.max_decode_steps = 8;
  t.cfg.k = 5;
  t.cfg.strict_selective_read = strict;
  nn::Rng rng(seed);
  t.params = std::make_unique<ModelParams>(t.cfg, t.vocab, t.nl, rng);
  return t;
}

std::vector<double> values_of(nn::Graph& g, nn::Graph::Ref r) {
  const nn::Tensor& t = g.value(r);
  return {t.data(), t.data() + t.size()};
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("config defaults follow the published setup and round-trip as json") {
  model::ModelConfig cfg;
  CHECK(cfg.nl_embed_dim == 300);
  CHECK(cfg.code_embed_dim == 256);
  CHECK(cfg.output_embed_dim == 256);
  CHECK(cfg.beam_size == 15);
  CHECK(cfg.max_decode_steps == 60);
  CHECK(cfg.k == 5);
  CHECK(cfg.share_nl_encoder);

  cfg.encoder_hidden = 128;
  cfg.dropout = 0.3;
  model::ModelConfig back = model::ModelConfig::from_json(cfg.to_json());
  CHECK(back.encoder_hidden == 128);
  CHECK(back.dropout == 0.3);
  CHECK(back.beam_size == 15);

  model::ModelConfig bad;
  bad.encoder_hidden = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("signature masking replaces only out-of-vocabulary prefix tokens") {
  Tiny t = make_tiny(1);
  // vocab contains: sort, key, arr, idx, walk, f, v, '(', ')', ',', '.', "'"
  std::vector<std::string> sig = {"Index", ".", "get_loc", "(", "key", ")"};
  std::vector<std::string> masked = model::mask_signature(sig, t.vocab);
  CHECK(masked == std::vector<std::string>{"<func>", ".", "<func>", "(", "key", ")"});

  std::vector<std::string> known = {"idx", ".", "walk", "(", "key", ")"};
  CHECK(model::mask_signature(known, t.vocab) == known);

  // Attribute-style entry without parentheses: the whole token run is prefix,
  // so every out-of-vocabulary token in it is masked (":" is OOV here too).
  std::vector<std::string> attr = corpus::tokenize_snippet("DataFrame.columns: Index");
  std::vector<std::string> attr_masked = model::mask_signature(attr, t.vocab);
  CHECK(attr_masked == std::vector<std::string>{"<func>", ".", "<func>", "<func>", "<func>"});

  // Out-of-vocabulary tokens inside the parentheses stay as they are.
  std::vector<std::string> inner = {"idx", ".", "walk", "(", "strange_arg", ")"};
  CHECK(model::mask_signature(inner, t.vocab)[4] == "strange_arg");
}

TEST_CASE("copy index collects symbols and their slots from intent and signatures") {
  model::CopyCandidateIndex idx = model::build_copy_index(
      {"sort", "arr"}, {{"sorted", "(", "arr", ")"}});
  CHECK(idx.symbols == std::vector<std::string>{"sort", "arr", "sorted", "(", ")"});
  REQUIRE(idx.find("arr") >= 0);
  CHECK(idx.slots_of_symbol[static_cast<std::size_t>(idx.find("arr"))] ==
        std::vector<int>{1, 4});
  CHECK(idx.n_slots() == 6);

  model::CopyCandidateIndex intent_only = model::build_copy_index({"sort", "arr"}, {});
  CHECK(intent_only.symbols == std::vector<std::string>{"sort", "arr"});

  model::CopyCandidateIndex dup = model::build_copy_index({"x"}, {{"f", "(", "x", ",", "x", ")"}});
  CHECK(dup.slots_of_symbol[static_cast<std::size_t>(dup.find("x"))].size() == 3);

  // Special surfaces never become candidates.
  model::CopyCandidateIndex spec = model::build_copy_index({"x"}, {{"<func>", "(", "x", ")"}});
  CHECK(spec.find("<func>") == -1);
}

TEST_CASE("masking never changes the copyable symbol set") {
  Tiny t = make_tiny(2);
  std::vector<docstore::ApiEntry> entries = {
      entry("pandas.Index.get_loc", "Index.get_loc(key)", "Get the location of a key.")};
  SequenceContext ctx(*t.params, {"find", "the", "key"}, entries, false, nullptr);
  // Index and get_loc are OOV and masked for embedding, yet remain candidates.
  CHECK(ctx.index().find("Index") >= 0);
  CHECK(ctx.index().find("get_loc") >= 0);
  CHECK(ctx.index().find("<func>") == -1);

  model::CopyCandidateIndex direct = model::build_copy_index(
      {"find", "the", "key"}, {corpus::tokenize_snippet("Index.get_loc(key)")});
  CHECK(direct.symbols == ctx.index().symbols);
}

TEST_CASE("one-token descriptions align every signature position to the same state") {
  Tiny t = make_tiny(3);
  std::vector<docstore::ApiEntry> entries = {entry("k", "sort(arr)", "ordering")};
  SequenceContext ctx(*t.params, {"sort", "it"}, entries, false, nullptr);
  REQUIRE(ctx.index().n_slots() == 2 + 4);
  std::vector<double> first = values_of(ctx.graph(), ctx.rep(2));
  for (std::size_t slot = 3; slot < 6; ++slot) {
    CHECK(values_of(ctx.graph(), ctx.rep(slot)) == first);
  }
}

TEST_CASE("zero alignment weights average the description states") {
  Tiny t = make_tiny(4);
  t.params->att_doc_w->value.fill(0.0);
  std::vector<docstore::ApiEntry> entries = {entry("k", "sort(arr)", "orders the values")};
  SequenceContext ctx(*t.params, {"sort", "it"}, entries, false, nullptr);

  // Recompute the description encoding independently and average it.
  nn::Graph g;
  std::vector<nn::Graph::Ref> embs;
  for (const std::string& tok : corpus::tokenize_nl("orders the values")) {
    embs.push_back(g.row(*t.params->nl_embed,
                         static_cast<std::size_t>(t.nl.id_or_unk(tok))));
  }
  nn::BiLstmOut enc = nn::bilstm_encode(g, t.params->enc_desc, embs);
  std::size_t width = t.params->state_width();
  std::vector<double> mean(width, 0.0);
  for (nn::Graph::Ref o : enc.outputs) {
    for (std::size_t d = 0; d < width; ++d) mean[d] += g.value(o)[d] / 3.0;
  }
  std::vector<double> rep = values_of(ctx.graph(), ctx.rep(2));
  for (std::size_t d = 0; d < width; ++d) CHECK(rep[d] == doctest::Approx(mean[d]).epsilon(1e-12));
}

TEST_CASE("entry encoding matches a scalar recomputation of the alignment") {
  Tiny t = make_tiny(5);
  std::string signature = "idx.walk(key)";
  std::string description = "walks an index tree";
  std::vector<docstore::ApiEntry> entries = {entry("k", signature, description)};
  SequenceContext ctx(*t.params, {"walk", "it"}, entries, false, nullptr);

  // Recompute s', d', the bilinear alignment, and the weighted sum by hand.
  nn::Graph g;
  std::vector<nn::Graph::Ref> sig_embs;
  for (const std::string& tok :
       model::mask_signature(corpus::tokenize_snippet(signature), t.vocab)) {
    sig_embs.push_back(g.row(*t.params->code_embed,
                             static_cast<std::size_t>(t.params->code_embed_id(tok))));
  }
  nn::BiLstmOut s_enc = nn::bilstm_encode(g, t.params->enc_sg, sig_embs);
  std::vector<nn::Graph::Ref> desc_embs;
  for (const std::string& tok : corpus::tokenize_nl(description)) {
    desc_embs.push_back(g.row(*t.params->nl_embed,
                              static_cast<std::size_t>(t.nl.id_or_unk(tok))));
  }
  nn::BiLstmOut d_enc = nn::bilstm_encode(g, t.params->enc_desc, desc_embs);

  std::size_t width = t.params->state_width();
  for (std::size_t i = 0; i < s_enc.outputs.size(); ++i) {
    std::vector<double> alphas;
    for (nn::Graph::Ref d : d_enc.outputs) {
      alphas.push_back(nn::bilinear_score_values(g.value(s_enc.outputs[i]),
                                                 t.params->att_doc_w->value, g.value(d)));
    }
    double mx = *std::max_element(alphas.begin(), alphas.end());
    double z = 0.0;
    for (double a : alphas) z += std::exp(a - mx);
    std::vector<double> expected(width, 0.0);
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      double w = std::exp(alphas[j] - mx) / z;
      for (std::size_t d = 0; d < width; ++d) expected[d] += w * g.value(d_enc.outputs[j])[d];
    }
    std::vector<double> got = values_of(ctx.graph(), ctx.rep(2 + i));
    for (std::size_t d = 0; d < width; ++d) {
      CHECK(got[d] == doctest::Approx(expected[d]).epsilon(1e-9));
    }
  }
}

TEST_CASE("entries with empty signature or description are skipped with a count") {
  Tiny t = make_tiny(6);
  std::vector<docstore::ApiEntry> entries = {
      entry("ok", "sort(arr)", "fine"),
      entry("nosig", "", "has description"),
      entry("nodesc", "f(x)", ""),
  };
  SequenceContext ctx(*t.params, {"sort"}, entries, false, nullptr);
  CHECK(ctx.skipped_entries() == 2);
  CHECK(ctx.index().find("sort") >= 0);
  CHECK(ctx.index().find("f") == -1);
}

TEST_CASE("step distribution sums to one with an exact generation/copy case split") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Tiny t = make_tiny(seed * 17);
    std::vector<docstore::ApiEntry> entries = {
        entry("k1", "flip_rows(key)", "flips the rows"),
        entry("k2", "idx.walk(key)", "walks an index tree"),
    };
    SequenceContext ctx(*t.params, {"flip", "the", "rows", "'", "v9", "'"}, entries, false,
                        nullptr);
    SequenceContext::Step step =
        ctx.advance(ctx.initial_step(), corpus::Vocabulary::bos_token());
    StepDistribution dist = ctx.distribution(step);

    CHECK(std::fabs(dist.total() - 1.0) < 1e-9);
    for (const StepDistribution::Outcome& o : dist.outcomes) {
      CHECK(o.p > 0.0);
      if (o.vocab_id < 0) CHECK(o.q_g == 0.0);               // copy-only symbols
      if (o.symbol_id < 0) CHECK(o.q_c == 0.0);              // outside M
      if (o.surface == corpus::Vocabulary::unk_token()) CHECK(o.q_c == 0.0);
      CHECK(o.p == o.q_g + o.q_c);
    }

    // flip_rows is out of vocabulary: purely copy mass.
    const StepDistribution::Outcome* oov = dist.find("flip_rows");
    REQUIRE(oov != nullptr);
    CHECK(oov->q_g == 0.0);
    CHECK(oov->q_c > 0.0);
    // walk sits in both V and M: both routes contribute.
    const StepDistribution::Outcome* both = dist.find("walk");
    REQUIRE(both != nullptr);
    CHECK(both->q_g > 0.0);
    CHECK(both->q_c > 0.0);
    CHECK(both->vocab_id >= 0);
    CHECK(both->symbol_id >= 0);
  }
}

TEST_CASE("without documents, emissions stay inside vocabulary, UNK, and intent symbols") {
  Tiny t = make_tiny(31);
  // Intent tokens all in the nl/code vocabularies; no entries retrieved.
  SequenceContext ctx(*t.params, {"sort", "key"}, {}, false, nullptr);
  SequenceContext::Step step = ctx.advance(ctx.initial_step(), corpus::Vocabulary::bos_token());
  StepDistribution dist = ctx.distribution(step);
  for (const StepDistribution::Outcome& o : dist.outcomes) {
    bool in_vocab = t.vocab.contains(o.surface);
    bool is_intent = o.surface == "sort" || o.surface == "key";
    CHECK((in_vocab || is_intent));
  }
  // Any surface present in a retrieved signature is reachable.
  std::vector<docstore::ApiEntry> entries = {entry("k", "brand_new(thing)", "does new things")};
  SequenceContext ctx2(*t.params, {"sort", "key"}, entries, false, nullptr);
  StepDistribution dist2 =
      ctx2.distribution(ctx2.advance(ctx2.initial_step(), corpus::Vocabulary::bos_token()));
  for (const std::string& sym : {std::string("brand_new"), std::string("thing")}) {
    const StepDistribution::Outcome* o = dist2.find(sym);
    REQUIRE(o != nullptr);
    CHECK(o->p > 0.0);
  }
}

TEST_CASE("selective read vanishes for never-copied symbols and tracks single slots") {
  Tiny t = make_tiny(32);
  std::vector<docstore::ApiEntry> entries = {entry("k", "sort(arr)", "orders things")};
  SequenceContext ctx(*t.params, {"sort", "arr"}, entries, false, nullptr);

  SequenceContext::StepDebug debug;
  SequenceContext::Step s1 =
      ctx.advance(ctx.initial_step(), corpus::Vocabulary::bos_token(), &debug);
  // BOS is not in M: the selective read is exactly zero.
  for (double v : values_of(ctx.graph(), debug.selective)) CHECK(v == 0.0);

  // "(" occurs in exactly one slot: the selective read equals that slot's rep.
  SequenceContext::StepDebug debug2;
  (void)ctx.advance(s1, "(", &debug2);
  int sym = ctx.index().find("(");
  REQUIRE(sym >= 0);
  const std::vector<int>& slots = ctx.index().slots_of_symbol[static_cast<std::size_t>(sym)];
  REQUIRE(slots.size() == 1);
  CHECK(values_of(ctx.graph(), debug2.selective) ==
        values_of(ctx.graph(), ctx.rep(static_cast<std::size_t>(slots[0]))));
}

TEST_CASE("attentive read matches a scalar recomputation over two representations") {
  Tiny t = make_tiny(33);
  SequenceContext ctx(*t.params, {"sort", "key"}, {}, false, nullptr);
  SequenceContext::Step init = ctx.initial_step();
  SequenceContext::StepDebug debug;
  (void)ctx.advance(init, corpus::Vocabulary::bos_token(), &debug);

  std::size_t width = t.params->state_width();
  std::vector<double> z = values_of(ctx.graph(), init.z);
  std::vector<double> betas;
  for (std::size_t slot = 0; slot < 2; ++slot) {
    std::vector<double> h = values_of(ctx.graph(), ctx.rep(slot));
    double score = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        score += h[i] * t.params->att_dec_w->value.at(i, j) * z[j];
      }
    }
    betas.push_back(score);
  }
  double mx = std::max(betas[0], betas[1]);
  double z0 = std::exp(betas[0] - mx), z1 = std::exp(betas[1] - mx);
  double w0 = z0 / (z0 + z1), w1 = z1 / (z0 + z1);
  std::vector<double> h0 = values_of(ctx.graph(), ctx.rep(0));
  std::vector<double> h1 = values_of(ctx.graph(), ctx.rep(1));
  std::vector<double> got = values_of(ctx.graph(), debug.attentive);
  for (std::size_t d = 0; d < width; ++d) {
    CHECK(got[d] == doctest::Approx(w0 * h0[d] + w1 * h1[d]).epsilon(1e-9));
  }

  // A single representation receives all the attention regardless of scores.
  SequenceContext ctx1(*t.params, {"sort"}, {}, false, nullptr);
  SequenceContext::StepDebug debug1;
  (void)ctx1.advance(ctx1.initial_step(), corpus::Vocabulary::bos_token(), &debug1);
  CHECK(values_of(ctx1.graph(), debug1.attentive) == values_of(ctx1.graph(), ctx1.rep(0)));
}

TEST_CASE("teacher-forced loss equals the step distributions it trains against") {
  for (bool strict : {false, true}) {
    Tiny t = make_tiny(36, strict);
    std::vector<corpus::ApiAnnotation> apis = {{"flip_rows(value)", "flips the rows", "os",
                                                "flip_rows"}};
    // Gold mixes: "idx"/"walk" in V and M, "flip_rows" copy-only, "zzz" UNK.
    corpus::Example ex =
        make_example("e", "walk the idx with flip_rows maybe", "idx.walk(flip_rows) zzz", apis);
    std::vector<docstore::ApiEntry> entries = {
        entry("os.flip_rows", "flip_rows(value)", "flips the rows")};

    model::LossOptions options;
    options.training = false;
    double loss = model::example_loss(*t.params, ex, entries, options);

    SequenceContext ctx(*t.params, corpus::tokenize_nl(ex.intent), entries, false, nullptr);
    SequenceContext::Step step = ctx.initial_step();
    std::string prev = corpus::Vocabulary::bos_token();
    double expected = 0.0;
    std::vector<std::string> golds = ex.snippet_tokens;
    golds.push_back(corpus::Vocabulary::eos_token());
    for (const std::string& gold : golds) {
      step = ctx.advance(step, prev);
      StepDistribution dist = ctx.distribution(step);
      const StepDistribution::Outcome* o = dist.find(gold);
      double p;
      if (o != nullptr) {
        p = o->p;
      } else {
        p = dist.find(corpus::Vocabulary::unk_token())->p;
      }
      expected += -std::log(p);
      prev = gold;
    }
    CHECK(loss == doctest::Approx(expected).epsilon(1e-9));
  }

  Tiny t2 = make_tiny(35);
  corpus::Example empty = make_example("x", "do it", "");
  CHECK_THROWS_AS(model::example_loss(*t2.params, empty, {}, {}), std::invalid_argument);
}

TEST_CASE("full-model gradients pass finite differences for copy, gen, and UNK targets") {
  for (bool strict : {false, true}) {
    CAPTURE(strict);
    Tiny t = make_tiny(36, strict);
    std::vector<corpus::Example> batch = {
        make_example("a", "walk the idx", "idx.walk(novel_sym)",
                     {{"idx.walk(novel_sym)", "walks an index tree", "os", "walk"}}),
        make_example("b", "sort the array", "sort(arr) zzz",
                     {{"sort(arr)", "sorts a sequence", "os", "sort"}}),
    };
    std::vector<std::vector<docstore::ApiEntry>> entries = {
        {entry("os.walk", "idx.walk(novel_sym)", "walks an index tree")},
        {entry("os.sort", "sort(arr)", "sorts a sequence")},
    };

    // The raw summed loss is O(40); checked at a small constant scale so the
    // finite-difference cancellation noise stays below the relative-error
    // floor on coordinates whose true gradient is numerically zero.
    const double scale = 1e-5;
    auto loss = [&]() {
      double total = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        model::LossOptions options;
        options.training = false;
        options.backprop = true;
        options.grad_scale = scale;
        total += model::example_loss(*t.params, batch[i], entries[i], options);
      }
      return total * scale;
    };
    std::vector<nn::Parameter*> params = t.params->store().all();
    nn::GradCheckOptions gc;
    gc.eps = 1e-5;
    gc.high_order = true;
    gc.max_coords_per_param = 25;
    nn::GradCheckResult res = grad_check(loss, params, gc);
    CAPTURE(res.worst_param);
    CAPTURE(res.analytic);
    CAPTURE(res.numeric);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("beam size one reproduces greedy decoding on random models") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Tiny t = make_tiny(1000 + seed * 7);
    std::vector<docstore::ApiEntry> entries;
    if (seed % 2 == 0) entries.push_back(entry("k", "flip_rows(key)", "flips the rows"));
    std::vector<std::string> intent = {"sort", "the", "rows"};
    if (seed % 3 == 0) intent = {"walk", "'", "v7", "'"};

    model::DecodeResult greedy = model::decode_greedy(*t.params, intent, entries, 8);
    model::DecodeResult beam1 = model::decode_beam(*t.params, intent, entries, 1, 8);
    CHECK(greedy.tokens == beam1.tokens);
    CHECK(greedy.log_prob == doctest::Approx(beam1.log_prob).epsilon(1e-12));

    model::DecodeResult wide = model::decode(*t.params, intent, entries, 4, 8);
    CHECK(wide.log_prob >= greedy.log_prob - 1e-12);
  }
}

TEST_CASE("forced UNK decodes to the step limit; forced EOS stops immediately") {
  Tiny t = make_tiny(77);
  t.params->gen_b->value[corpus::Vocabulary::kUnk] = 50.0;
  model::DecodeResult unk = model::decode_greedy(*t.params, {"sort", "key"}, {}, 8);
  CHECK(unk.tokens.size() == 8);
  CHECK_FALSE(unk.finished);
  for (const std::string& tok : unk.tokens) CHECK(tok == corpus::Vocabulary::unk_token());

  t.params->gen_b->value[corpus::Vocabulary::kUnk] = 0.0;
  t.params->gen_b->value[corpus::Vocabulary::kEos] = 50.0;
  model::DecodeResult eos = model::decode_greedy(*t.params, {"sort", "key"}, {}, 8);
  CHECK(eos.tokens.empty());
  CHECK(eos.finished);
  model::DecodeResult beam = model::decode_beam(*t.params, {"sort", "key"}, {}, 3, 8);
  CHECK(beam.tokens.empty());
  CHECK(beam.finished);
}

TEST_CASE("pretrained embeddings seed matching rows, the rest stay random") {
  Tiny base = make_tiny(90);
  std::unordered_map<std::string, std::vector<double>> table;
  table["sort"] = {1.5, -2.5, 3.5, -4.5, 5.5};
  table["nonexistent"] = {9, 9, 9, 9, 9};
  nn::Rng rng(90);
  model::ModelParams params(base.cfg, base.vocab, base.nl, rng, &table);

  int sort_id = base.nl.id_or_unk("sort");
  REQUIRE(sort_id != model::NlVocab::kUnk);
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(params.nl_embed->value.at(static_cast<std::size_t>(sort_id), d) ==
          table["sort"][d]);
  }
  // A word without a pretrained vector keeps its random initialization.
  int the_id = base.nl.id_or_unk("the");
  double norm = 0.0;
  for (std::size_t d = 0; d < 5; ++d) {
    double v = params.nl_embed->value.at(static_cast<std::size_t>(the_id), d);
    CHECK(std::fabs(v) <= 0.1);
    norm += v * v;
  }
  CHECK(norm > 0.0);

  std::unordered_map<std::string, std::vector<double>> bad;
  bad["sort"] = {1.0, 2.0};  // wrong width
  nn::Rng rng2(91);
  CHECK_THROWS_AS(model::ModelParams(base.cfg, base.vocab, base.nl, rng2, &bad),
                  std::invalid_argument);
}

TEST_CASE("model checkpoints are self-contained") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "docgen_model_ckpt";
  fs::create_directories(dir);
  std::string path = (dir / "model.ckpt").string();

  Tiny t = make_tiny(88);
  std::vector<docstore::ApiEntry> entries = {entry("k", "flip_rows(key)", "flips the rows")};
  model::DecodeResult before =
      model::decode(*t.params, {"flip", "the", "rows"}, entries, 4, 8);

  model::save_model(path, *t.params, nlohmann::json{{"epoch", 3}, {"dev_bleu", 12.5}});
  model::LoadedModel loaded = model::load_model(path);
  CHECK(loaded.train_meta.at("epoch") == 3);
  CHECK(loaded.params->vocab().tokens == t.vocab.tokens);
  CHECK(loaded.params->config().encoder_hidden == t.cfg.encoder_hidden);

  model::DecodeResult after =
      model::decode(*loaded.params, {"flip", "the", "rows"}, entries, 4, 8);
  CHECK(before.tokens == after.tokens);
  CHECK(before.log_prob == after.log_prob);
  fs::remove_all(dir);
}

TEST_SUITE_END();
