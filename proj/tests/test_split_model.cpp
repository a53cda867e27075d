#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "walloc/split_model.hpp"

using namespace walloc;

namespace {

// Synthetic corpus: "region_affinity" drives the label with given strength,
// the other attributes are noise.
TrainingCorpus synthetic_corpus(std::mt19937_64& rng, int k, int rows, double strength) {
  const std::vector<std::string> colours = {"red", "blue", "green"};
  TrainingCorpus corpus;
  corpus.article_type = "Tshirts";
  corpus.gender = "Men";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < rows; ++r) {
    CorpusRow row;
    int affinity = static_cast<int>(rng() % k);
    row.attributes["region_affinity"] = "c" + std::to_string(affinity);
    row.attributes["colour"] = colours[rng() % colours.size()];
    if (u(rng) < strength)
      row.label = affinity;
    else
      row.label = static_cast<int>(rng() % k);
    corpus.rows.push_back(std::move(row));
  }
  return corpus;
}

Sku sku_with(const std::map<std::string, std::string>& attrs) {
  return {"s", attrs, "Tshirts", "Men"};
}

double empirical_entropy(const TrainingCorpus& corpus, int k) {
  std::vector<double> freq(k, 0.0);
  for (const auto& row : corpus.rows) freq[row.label] += 1.0;
  double h = 0.0;
  for (double f : freq) {
    if (f == 0.0) continue;
    double p = f / corpus.rows.size();
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

TEST_CASE("baseline is the empirical label frequency") {
  TrainingCorpus corpus;
  for (int i = 0; i < 10; ++i) corpus.rows.push_back({{}, i < 5 ? 0 : 1});
  auto m = SplitClassifier::fit(corpus, 2, ClassifierKind::Baseline);
  auto p = m.predict_proba(sku_with({{"colour", "red"}}));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
}

TEST_CASE("baseline with skewed frequencies is constant across skus") {
  TrainingCorpus corpus;
  for (int i = 0; i < 4; ++i) corpus.rows.push_back({{}, i < 1 ? 0 : i < 2 ? 1 : 2});
  auto m = SplitClassifier::fit(corpus, 3, ClassifierKind::Baseline);
  auto a = m.predict_proba(sku_with({{"colour", "red"}}));
  auto b = m.predict_proba(sku_with({{"brand", "x"}}));
  CHECK(a == b);
  CHECK(a[2] == doctest::Approx(0.5));
}

TEST_CASE("fit rejects an empty corpus") {
  TrainingCorpus corpus;
  CHECK_THROWS_AS(SplitClassifier::fit(corpus, 2, ClassifierKind::Baseline), EmptyCorpus);
  CHECK_THROWS_AS(SplitClassifier::fit(corpus, 2, ClassifierKind::Logistic), EmptyCorpus);
}

TEST_CASE("degenerate single-class corpus: smoothed constant predictor with flag") {
  TrainingCorpus corpus;
  for (int i = 0; i < 5; ++i) corpus.rows.push_back({{{"colour", "red"}}, 1});
  auto m = SplitClassifier::fit(corpus, 3, ClassifierKind::Logistic);
  CHECK(m.degenerate());
  auto p = m.predict_proba(sku_with({{"colour", "blue"}}));
  CHECK(p[1] > 0.999);
  CHECK(p[0] > 0.0);

  auto baseline = SplitClassifier::fit(corpus, 3, ClassifierKind::Baseline);
  CHECK_FALSE(baseline.degenerate());
  CHECK(baseline.predict_proba(sku_with({}))[1] == doctest::Approx(1.0));
}

TEST_CASE("logistic model learns an attribute-determined split") {
  std::mt19937_64 rng(5);
  auto corpus = synthetic_corpus(rng, 3, 10000, 1.0);  // fully deterministic labels
  auto m = SplitClassifier::fit(corpus, 3, ClassifierKind::Logistic);
  auto p = m.predict_proba(sku_with({{"region_affinity", "c0"}, {"colour", "red"}}));
  CHECK(p[0] > 0.95);
  p = m.predict_proba(sku_with({{"region_affinity", "c2"}, {"colour", "blue"}}));
  CHECK(p[2] > 0.95);
}

TEST_CASE("unknown attribute values fall into the unknown bucket, never error") {
  std::mt19937_64 rng(9);
  auto corpus = synthetic_corpus(rng, 2, 500, 0.9);
  auto m = SplitClassifier::fit(corpus, 2, ClassifierKind::Logistic);
  auto p = m.predict_proba(sku_with({{"region_affinity", "never-seen"}, {"colour", "puce"}}));
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predict_proba rows are valid distributions (property)") {
  std::mt19937_64 rng(13);
  for (auto kind : {ClassifierKind::Baseline, ClassifierKind::Logistic,
                    ClassifierKind::Perceptron}) {
    auto corpus = synthetic_corpus(rng, 4, 300, 0.7);
    FitOptions opts;
    opts.epochs = 50;
    auto m = SplitClassifier::fit(corpus, 4, kind, opts);
    for (int t = 0; t < 20; ++t) {
      auto p = m.predict_proba(
          sku_with({{"region_affinity", "c" + std::to_string(rng() % 6)}}));
      double sum = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("log loss: perfect, uniform, and oracle-checked values") {
  SUBCASE("uniform predictor over K=4 scores ln 4") {
    TrainingCorpus corpus;
    for (int i = 0; i < 8; ++i) corpus.rows.push_back({{}, i % 4});
    auto m = SplitClassifier::fit(corpus, 4, ClassifierKind::Baseline);
    CHECK(m.log_loss(corpus) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
  }
  SUBCASE("near-one-hot predictions score near zero") {
    TrainingCorpus corpus;
    for (int i = 0; i < 5; ++i) corpus.rows.push_back({{}, 1});
    auto m = SplitClassifier::fit(corpus, 3, ClassifierKind::Baseline);  // predicts [0,1,0]
    CHECK(m.log_loss(corpus) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("baseline training loss equals the empirical label entropy") {
    std::mt19937_64 rng(17);
    auto corpus = synthetic_corpus(rng, 4, 400, 0.5);
    auto m = SplitClassifier::fit(corpus, 4, ClassifierKind::Baseline);
    CHECK(m.log_loss(corpus) == doctest::Approx(empirical_entropy(corpus, 4)).epsilon(1e-9));
  }
  SUBCASE("held-out loss matches a direct recomputation") {
    std::mt19937_64 rng(19);
    auto train = synthetic_corpus(rng, 3, 400, 0.8);
    auto held = synthetic_corpus(rng, 3, 100, 0.8);
    auto m = SplitClassifier::fit(train, 3, ClassifierKind::Baseline);
    double manual = 0.0;
    for (const auto& row : held.rows) {
      auto p = m.predict_from_attrs(row.attributes);
      manual += -std::log(std::max(p[row.label], 1e-12));
    }
    manual /= held.rows.size();
    CHECK(m.log_loss(held) == doctest::Approx(manual).epsilon(1e-12));
  }
  SUBCASE("empty corpus errors") {
    TrainingCorpus corpus;
    corpus.rows.push_back({{}, 0});
    auto m = SplitClassifier::fit(corpus, 2, ClassifierKind::Baseline);
    CHECK_THROWS_AS(m.log_loss(TrainingCorpus{}), EmptyCorpus);
  }
}

TEST_CASE("logistic beats the frequency baseline on attribute-driven data") {
  std::mt19937_64 rng(23);
  auto train = synthetic_corpus(rng, 4, 3000, 0.8);
  auto held = synthetic_corpus(rng, 4, 1000, 0.8);
  auto baseline = SplitClassifier::fit(train, 4, ClassifierKind::Baseline);
  auto logistic = SplitClassifier::fit(train, 4, ClassifierKind::Logistic);
  CHECK(logistic.log_loss(held) < baseline.log_loss(held) - 0.05);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(29);
  for (auto kind : {ClassifierKind::Logistic, ClassifierKind::Perceptron}) {
    auto corpus = synthetic_corpus(rng, 3, 40, 0.7);
    FitOptions opts;
    opts.epochs = 3;
    opts.hidden = 4;
    auto m = SplitClassifier::fit(corpus, 3, kind, opts);
    auto params = m.parameter_view();
    auto [loss0, grad] = m.loss_and_gradient(corpus, 1e-4);
    (void)loss0;
    REQUIRE(grad.size() == params.size());
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
      std::size_t i = pick(rng);
      const double saved = *params[i];
      *params[i] = saved + h;
      double up = m.loss_and_gradient(corpus, 1e-4).first;
      *params[i] = saved - h;
      double down = m.loss_and_gradient(corpus, 1e-4).first;
      *params[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-8});
      CHECK(std::fabs(numeric - grad[i]) / denom < 1e-4);
    }
  }
}

TEST_CASE("softmax is permutation-equivariant") {
  std::vector<double> z = {0.3, -1.2, 2.0, 0.0};
  auto p = softmax(z);
  std::vector<double> zp = {2.0, 0.0, 0.3, -1.2};
  auto pp = softmax(zp);
  CHECK(pp[0] == doctest::Approx(p[2]).epsilon(1e-15));
  CHECK(pp[1] == doctest::Approx(p[3]).epsilon(1e-15));
  CHECK(pp[2] == doctest::Approx(p[0]).epsilon(1e-15));
  CHECK(pp[3] == doctest::Approx(p[1]).epsilon(1e-15));
}

TEST_CASE("save/load round-trips to bitwise-equal predictions") {
  std::mt19937_64 rng(31);
  for (auto kind : {ClassifierKind::Baseline, ClassifierKind::Logistic,
                    ClassifierKind::Perceptron}) {
    auto corpus = synthetic_corpus(rng, 3, 200, 0.8);
    FitOptions opts;
    opts.epochs = 40;
    opts.hidden = 5;
    auto m = SplitClassifier::fit(corpus, 3, kind, opts);
    std::stringstream buf;
    m.save(buf);
    auto loaded = SplitClassifier::load(buf);
    for (int t = 0; t < 10; ++t) {
      auto attrs = sku_with({{"region_affinity", "c" + std::to_string(rng() % 4)},
                             {"colour", t % 2 ? "red" : "nope"}});
      auto a = m.predict_proba(attrs);
      auto b = loaded.predict_proba(attrs);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bitwise
    }
  }
}

TEST_CASE("registry selects per (article_type, gender) with a global fallback") {
  std::mt19937_64 rng(37);
  auto corpus_a = synthetic_corpus(rng, 2, 100, 1.0);
  TrainingCorpus corpus_b;
  for (int i = 0; i < 10; ++i) corpus_b.rows.push_back({{}, 1});

  ModelRegistry reg;
  reg.add("Tshirts", "Men", SplitClassifier::fit(corpus_a, 2, ClassifierKind::Baseline));
  reg.set_global(SplitClassifier::fit(corpus_b, 2, ClassifierKind::Baseline));

  Sku known{"s1", {}, "Tshirts", "Men"};
  Sku unknown{"s2", {}, "Dresses", "Women"};
  CHECK(reg.select(known).predict_proba(known)[0] > 0.0);
  CHECK(reg.select(unknown).predict_proba(unknown)[1] == doctest::Approx(1.0));

  std::stringstream buf;
  reg.save(buf);
  auto loaded = ModelRegistry::load(buf);
  CHECK(loaded.partition_count() == 1);
  CHECK(loaded.select(unknown).predict_proba(unknown)[1] == doctest::Approx(1.0));
}

TEST_CASE("registry without fallback errors on unseen pairs") {
  ModelRegistry reg;
  Sku s{"x", {}, "Hats", "Unisex"};
  CHECK_THROWS_AS(reg.select(s), ValidationError);
}

TEST_CASE("build_split_matrix composes per-sku predictions") {
  TrainingCorpus corpus;
  for (int i = 0; i < 4; ++i) corpus.rows.push_back({{}, i % 2});
  auto m = SplitClassifier::fit(corpus, 2, ClassifierKind::Baseline);
  PurchaseOrder po;
  po.lines.push_back({{"A", {}, "T", "M"}, 3});
  po.lines.push_back({{"B", {}, "T", "M"}, 5});
  auto p = build_split_matrix(m, po, 2);
  CHECK(probability_rows_valid(p));
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("single-warehouse world: every prediction is [1.0]") {
  TrainingCorpus corpus;
  corpus.rows.push_back({{}, 0});
  auto m = SplitClassifier::fit(corpus, 1, ClassifierKind::Baseline);
  PurchaseOrder po;
  po.lines.push_back({{"A", {}, "T", "M"}, 1});
  auto p = build_split_matrix(m, po, 1);
  CHECK(p(0, 0) == doctest::Approx(1.0));
}
