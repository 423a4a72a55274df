#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tagroute/io.hpp"
#include "tagroute/normalize.hpp"
#include "tagroute/util.hpp"
#include "testsupport.hpp"

using namespace tagroute;

namespace {

// Embedder returning planted unit vectors.
class FixedEmbedder final : public Embedder {
 public:
  explicit FixedEmbedder(std::map<std::string, Embedding> vectors)
      : vectors_(std::move(vectors)) {}

  Embedding embed(const Tag& tag) const override {
    auto it = vectors_.find(tag.name());
    if (it == vectors_.end()) {
      fail(Errc::MissingEntry, "no vector for '" + tag.name() + "'");
    }
    return it->second;
  }
  std::size_t dim() const override {
    return vectors_.empty() ? 0 : vectors_.begin()->second.dim();
  }

 private:
  std::map<std::string, Embedding> vectors_;
};

// Three unit vectors with pairwise cosines (t1,t2)=0.9, (t1,t3)=0.1,
// (t2,t3)=0.2, built by Cholesky by hand.
std::map<std::string, Embedding> planted_triplet() {
  std::map<std::string, Embedding> vectors;
  vectors["t1"] = Embedding{{1.0, 0.0, 0.0}};
  const double v22 = std::sqrt(1.0 - 0.9 * 0.9);
  vectors["t2"] = Embedding{{0.9, v22, 0.0}};
  const double v32 = (0.2 - 0.1 * 0.9) / v22;
  vectors["t3"] =
      Embedding{{0.1, v32, std::sqrt(1.0 - 0.1 * 0.1 - v32 * v32)}};
  return vectors;
}

// Independent re-simulation of the reduction loop used as the oracle for
// random clusters: argmin of cumulative similarity, ties remove the
// lexicographically larger name.
std::vector<std::string> brute_force_reduce(
    std::vector<std::string> names,
    const std::map<std::string, Embedding>& vectors, std::size_t keep,
    std::vector<std::string>* removal_order = nullptr) {
  while (names.size() > keep) {
    double best_sum = 1e300;
    std::string victim;
    for (const std::string& name : names) {
      double sum = 0.0;
      for (const std::string& other : names) {
        if (other != name) sum += cosine(vectors.at(name), vectors.at(other));
      }
      if (sum < best_sum || (sum == best_sum && name > victim)) {
        best_sum = sum;
        victim = name;
      }
    }
    if (removal_order) removal_order->push_back(victim);
    names.erase(std::find(names.begin(), names.end(), victim));
  }
  return names;
}

}  // namespace

TEST_CASE("rule_aggregate replaces specials and capitalizes words") {
  CHECK(rule_aggregate("text-generation!").name() == "Text Generation");
  CHECK(rule_aggregate("Summarization").name() == "Summarization");
  CHECK(rule_aggregate("q&a   task").name() == "Q A Task");
  CHECK(rule_aggregate("spell_check(v2)").name() == "Spell Check V2");
  CHECK(rule_aggregate("already UPPER case").name() == "Already UPPER Case");
}

TEST_CASE("rule_aggregate keeps non-ASCII letters and strips wide punctuation") {
  CHECK(rule_aggregate("文本生成！").name() == "文本生成");
  CHECK(rule_aggregate("概要・まとめ").name() == "概要 まとめ");
  CHECK_THROWS_AS(rule_aggregate("!!!"), Error);
}

TEST_CASE("frequency_filter keeps tags at or above the threshold") {
  const TagVocabulary at_five =
      frequency_filter({{"A", 5}, {"B", 4}}, 5);
  CHECK(at_five.counts.size() == 1);
  CHECK(at_five.contains("A"));

  CHECK(frequency_filter({}, 5).empty());

  const TagVocabulary mixed =
      frequency_filter({{"A", 100}, {"B", 5}, {"C", 1}}, 5);
  CHECK(mixed.counts.size() == 2);
  CHECK(mixed.contains("A"));
  CHECK(mixed.contains("B"));
  CHECK_FALSE(mixed.contains("C"));
  CHECK(mixed.remap.empty());
}

TEST_CASE("reduce_cluster leaves pairs untouched") {
  const auto vectors = planted_triplet();
  const std::vector<Tag> pair{make_tag("t1"), make_tag("t2")};
  const ClusterReduction reduction = reduce_cluster(pair, vectors);
  CHECK(reduction.survivors.size() == 2);
  CHECK(reduction.removed.empty());
}

TEST_CASE("reduce_cluster removes the least-similar member") {
  const auto vectors = planted_triplet();
  const std::vector<Tag> cluster{make_tag("t1"), make_tag("t2"), make_tag("t3")};
  const ClusterReduction reduction = reduce_cluster(cluster, vectors);
  REQUIRE(reduction.survivors.size() == 2);
  CHECK(reduction.removed.size() == 1);
  CHECK(reduction.removed[0].name() == "t3");  // cumulative 0.3 vs 1.0 and 1.1
  CHECK(reduction.survivors[0].name() == "t1");
  CHECK(reduction.survivors[1].name() == "t2");
}

TEST_CASE("reduce_cluster matches the brute-force oracle on random clusters") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t size = 2 + uniform_below(rng, 9);  // 2..10
    std::map<std::string, Embedding> vectors;
    std::vector<Tag> cluster;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < size; ++i) {
      const std::string name = "tag-" + std::to_string(trial) + "-" +
                               std::to_string(i);
      vectors[name] = trigram_embedding(name, 16);
      cluster.push_back(make_tag(name));
      names.push_back(name);
    }
    std::vector<std::string> expected_removals;
    const auto expected =
        brute_force_reduce(names, vectors, 2, &expected_removals);

    const ClusterReduction reduction = reduce_cluster(cluster, vectors);
    REQUIRE(reduction.survivors.size() == 2);
    REQUIRE(reduction.removed.size() == size - 2);
    for (std::size_t i = 0; i < expected_removals.size(); ++i) {
      CHECK(reduction.removed[i].name() == expected_removals[i]);
    }
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(reduction.survivors[i].name() == expected[i]);
    }
  }
}

TEST_CASE("reduce_cluster requires embeddings for every member") {
  const auto vectors = planted_triplet();
  const std::vector<Tag> cluster{make_tag("t1"), make_tag("missing")};
  try {
    reduce_cluster(cluster, vectors);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MissingEmbedding);
  }
}

TEST_CASE("semantic_aggregate keeps orthogonal tags as noise") {
  std::map<std::string, Embedding> vectors;
  TagVocabulary vocab;
  for (int i = 0; i < 4; ++i) {
    const std::string name = "axis" + std::to_string(i);
    Embedding e{{0.0, 0.0, 0.0, 0.0}};
    e.values[static_cast<std::size_t>(i)] = 1.0;
    vectors[name] = e;
    vocab.counts[name] = 10;
  }
  const FixedEmbedder embedder(std::move(vectors));
  const TagVocabulary out =
      semantic_aggregate(vocab, ClusterParams{0.2, 2}, embedder);
  CHECK(out.counts == vocab.counts);
  CHECK(out.remap.empty());
}

TEST_CASE("semantic_aggregate reduces the planted cluster and remaps counts") {
  TagVocabulary vocab;
  vocab.counts = {{"t1", 10}, {"t2", 7}, {"t3", 5}};
  const FixedEmbedder embedder(planted_triplet());
  // A radius of 0.95 pulls all three tags into one cluster.
  const TagVocabulary out =
      semantic_aggregate(vocab, ClusterParams{0.95, 2}, embedder);

  CHECK(out.counts.size() == 2);
  REQUIRE(out.remap.count("t3") == 1);
  CHECK(out.remap.at("t3") == "t2");  // cosine 0.2 beats 0.1
  CHECK(out.counts.at("t2") == 12);   // absorbed t3's count
  CHECK(out.counts.at("t1") == 10);
  CHECK(out.total_count() == 22);     // conservation
}

TEST_CASE("semantic_aggregate conserves count mass on random vocabularies") {
  std::mt19937_64 rng(31);
  ProviderConfig stub;
  const TagEmbedder embedder(stub);
  for (int trial = 0; trial < 10; ++trial) {
    TagVocabulary vocab;
    const std::size_t n = 5 + uniform_below(rng, 30);
    for (std::size_t i = 0; i < n; ++i) {
      vocab.counts["word" + std::to_string(uniform_below(rng, 40))] =
          5 + uniform_below(rng, 50);
    }
    const TagVocabulary out =
        semantic_aggregate(vocab, ClusterParams{0.35, 2}, embedder);
    CHECK(out.total_count() == vocab.total_count());
    CHECK(out.counts.size() <= vocab.counts.size());
    // every removed tag is remapped to a survivor
    for (const auto& [name, count] : vocab.counts) {
      (void)count;
      const bool surviving = out.contains(name);
      const bool remapped = out.remap.count(name) == 1;
      CHECK(surviving != remapped);
      if (remapped) CHECK(out.contains(out.remap.at(name)));
    }
  }
}

TEST_CASE("align_tag identity, remap resolution and exhaustive oracle") {
  ProviderConfig stub;
  const TagEmbedder embedder(stub);
  TagVocabulary vocab;
  for (const char* name :
       {"Translation", "Summarization", "Text Generation", "Geometry",
        "Question Answering", "Code Generation"}) {
    vocab.counts[name] = 10;
  }
  vocab.remap["Translate"] = "Translation";

  CHECK(align_tag(make_tag("Geometry"), vocab, embedder).name() == "Geometry");
  CHECK(align_tag(make_tag("Translate"), vocab, embedder).name() ==
        "Translation");

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::string raw = "oov";
    const std::size_t len = 1 + uniform_below(rng, 10);
    for (std::size_t i = 0; i < len; ++i) {
      raw.push_back(static_cast<char>('a' + uniform_below(rng, 26)));
    }
    const Tag generated = make_tag(raw);
    const Tag aligned = align_tag(generated, vocab, embedder);

    // exhaustive argmax over the vocabulary, smaller name on ties
    double best = -2.0;
    std::string expected;
    const Embedding probe = embedder.embed(generated);
    for (const auto& [name, count] : vocab.counts) {
      (void)count;
      const double sim = cosine(probe, embedder.embed(make_tag(name)));
      if (sim > best) {
        best = sim;
        expected = name;
      }
    }
    CHECK(aligned.name() == expected);
    // idempotence on the vocabulary
    CHECK(align_tag(aligned, vocab, embedder) == aligned);
  }
}

TEST_CASE("align_tag optional reject threshold returns the tag unchanged") {
  ProviderConfig stub;
  const TagEmbedder embedder(stub);
  TagVocabulary vocab;
  vocab.counts["Translation"] = 10;
  const Tag odd = make_tag("zzqq");
  CHECK(align_tag(odd, vocab, embedder).name() == "Translation");
  CHECK(align_tag(odd, vocab, embedder, 0.99).name() == "zzqq");
}

TEST_CASE("align_tag rejects an empty vocabulary") {
  ProviderConfig stub;
  const TagEmbedder embedder(stub);
  try {
    align_tag(make_tag("x"), TagVocabulary{}, embedder);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::EmptyVocabulary);
  }
}

TEST_CASE("vocabulary round-trip and corrupt-file rejection") {
  const std::string dir = planted::temp_dir("vocab");
  const std::string path = dir + "/vocab.json";

  TagVocabulary vocab;
  vocab.counts = {{"Translation", 12}, {"Summarization", 9}};
  vocab.remap = {{"Translate", "Translation"}};
  vocab.threshold = 5;
  vocab.cluster_params = ClusterParams{0.2, 3};
  save_vocabulary(vocab, path);

  const TagVocabulary loaded = load_vocabulary(path);
  CHECK(loaded.counts == vocab.counts);
  CHECK(loaded.remap == vocab.remap);
  CHECK(loaded.threshold == vocab.threshold);
  CHECK(loaded.cluster_params == vocab.cluster_params);

  write_file(path, "{ not json");
  CHECK_THROWS_AS(load_vocabulary(path), Error);

  write_file(path, R"({"version":1,"threshold":5,
    "tags":{"A":5},"remap":{"B":"Missing"}})");
  try {
    load_vocabulary(path);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::InvariantViolation);
  }
}

TEST_CASE("pipeline composes: rule aggregation, filter, aggregation") {
  std::map<std::string, std::uint64_t> raw_counts;
  const auto bump = [&](const std::string& raw, std::uint64_t n) {
    raw_counts[rule_aggregate(raw).name()] += n;
  };
  bump("text-generation!", 6);
  bump("text generation", 2);  // same canonical tag as above
  bump("geometry", 7);
  bump("rare tag", 1);

  const TagVocabulary filtered = frequency_filter(raw_counts, 5);
  CHECK(filtered.counts.at("Text Generation") == 8);
  CHECK(filtered.counts.at("Geometry") == 7);
  CHECK_FALSE(filtered.contains("Rare Tag"));

  ProviderConfig stub;
  const TagEmbedder embedder(stub);
  const TagVocabulary final_vocab =
      semantic_aggregate(filtered, ClusterParams{}, embedder);
  CHECK(final_vocab.total_count() == 15);
}
