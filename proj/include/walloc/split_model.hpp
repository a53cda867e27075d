#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "walloc/core.hpp"

namespace walloc {

// ---- feature encoding -------------------------------------------------------

// One-hot per attribute with a reserved "unknown" slot; unseen values route
// there instead of erroring. Encoding is deterministic given the vocabulary.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;

  static FeatureEncoder build(const std::vector<std::map<std::string, std::string>>& rows) {
    FeatureEncoder enc;
    std::map<std::string, std::map<std::string, int>> vocab;
    for (const auto& row : rows)
      for (const auto& [attr, value] : row) {
        auto& v = vocab[attr];
        if (!v.count(value)) {
          int next = static_cast<int>(v.size());
          v[value] = next;
        }
      }
    for (auto& [attr, v] : vocab) enc.attrs_.push_back({attr, std::move(v)});
    enc.recompute_offsets();
    return enc;
  }

  std::size_t dimension() const { return dim_; }
  std::size_t attribute_count() const { return attrs_.size(); }

  // Active one-hot indices, one per attribute (missing attribute == unknown).
  std::vector<int> encode(const std::map<std::string, std::string>& attributes) const {
    std::vector<int> idx;
    idx.reserve(attrs_.size());
    for (std::size_t a = 0; a < attrs_.size(); ++a) {
      const auto& [name, vocab] = attrs_[a];
      int local = static_cast<int>(vocab.size());  // unknown slot
      auto it = attributes.find(name);
      if (it != attributes.end()) {
        auto v = vocab.find(it->second);
        if (v != vocab.end()) local = v->second;
      }
      idx.push_back(offsets_[a] + local);
    }
    return idx;
  }

  void save(std::ostream& os) const {
    os << "attrs " << attrs_.size() << "\n";
    for (const auto& [name, vocab] : attrs_) {
      os << "attr " << name << " " << vocab.size() << "\n";
      std::vector<const std::string*> by_index(vocab.size());
      for (const auto& [value, idx] : vocab) by_index[idx] = &value;
      for (const auto* v : by_index) os << *v << "\n";
    }
  }

  static FeatureEncoder load(std::istream& is) {
    FeatureEncoder enc;
    std::string tag;
    std::size_t count = 0;
    is >> tag >> count;
    if (tag != "attrs") throw ParseError(0, "expected 'attrs' in model file");
    for (std::size_t a = 0; a < count; ++a) {
      std::string name;
      std::size_t vs = 0;
      is >> tag >> name >> vs;
      if (tag != "attr") throw ParseError(0, "expected 'attr' in model file");
      std::map<std::string, int> vocab;
      for (std::size_t i = 0; i < vs; ++i) {
        std::string value;
        is >> value;
        vocab[value] = static_cast<int>(i);
      }
      enc.attrs_.push_back({name, std::move(vocab)});
    }
    enc.recompute_offsets();
    return enc;
  }

  bool operator==(const FeatureEncoder&) const = default;

 private:
  void recompute_offsets() {
    offsets_.clear();
    dim_ = 0;
    for (const auto& [name, vocab] : attrs_) {
      offsets_.push_back(static_cast<int>(dim_));
      dim_ += vocab.size() + 1;  // + unknown
    }
  }

  std::vector<std::pair<std::string, std::map<std::string, int>>> attrs_;
  std::vector<int> offsets_;
  std::size_t dim_ = 0;
};

// ---- training data ----------------------------------------------------------

struct CorpusRow {
  std::map<std::string, std::string> attributes;
  int label = 0;  // nearest warehouse, 0-based, < K
};

struct TrainingCorpus {
  std::string article_type;
  std::string gender;
  std::vector<CorpusRow> rows;
};

// ---- classifier -------------------------------------------------------------

enum class ClassifierKind { Baseline, Logistic, Perceptron };

struct FitOptions {
  double step = 0.1;
  double l2 = 1e-4;
  int epochs = 500;
  int hidden = 16;  // perceptron only
  std::uint64_t seed = 42;
};

inline std::vector<double> softmax(std::vector<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

class SplitClassifier {
 public:
  ClassifierKind kind() const { return kind_; }
  int class_count() const { return k_; }
  bool degenerate() const { return degenerate_; }
  const FeatureEncoder& encoder() const { return encoder_; }

  std::vector<double> predict_proba(const Sku& sku) const {
    return predict_from_attrs(sku.attributes);
  }

  std::vector<double> predict_from_attrs(const std::map<std::string, std::string>& attrs) const {
    switch (kind_) {
      case ClassifierKind::Baseline:
        return base_freq_;
      case ClassifierKind::Logistic: {
        std::vector<double> z(bias_);
        for (int f : encoder_.encode(attrs))
          for (int c = 0; c < k_; ++c) z[c] += weights_[c * dim_ + f];
        return softmax(std::move(z));
      }
      case ClassifierKind::Perceptron: {
        std::vector<double> h(hidden_bias_);
        for (int f : encoder_.encode(attrs))
          for (int j = 0; j < hidden_; ++j) h[j] += hidden_weights_[j * dim_ + f];
        for (auto& v : h) v = std::tanh(v);
        std::vector<double> z(bias_);
        for (int c = 0; c < k_; ++c)
          for (int j = 0; j < hidden_; ++j) z[c] += weights_[c * hidden_ + j] * h[j];
        return softmax(std::move(z));
      }
    }
    return {};
  }

  static SplitClassifier fit(const TrainingCorpus& corpus, int class_count,
                             ClassifierKind kind, const FitOptions& opts = {});

  // mean of -log(P[label]) with a 1e-12 floor
  double log_loss(const TrainingCorpus& corpus) const {
    if (corpus.rows.empty()) throw EmptyCorpus("log_loss on empty corpus");
    double total = 0.0;
    for (const auto& row : corpus.rows) {
      auto p = predict_from_attrs(row.attributes);
      total += -std::log(std::max(p[row.label], 1e-12));
    }
    return total / static_cast<double>(corpus.rows.size());
  }

  void save(std::ostream& os) const;
  static SplitClassifier load(std::istream& is);

  // Flat parameter view for gradient checking; test support.
  std::vector<double*> parameter_view() {
    std::vector<double*> ps;
    for (auto& v : hidden_weights_) ps.push_back(&v);
    for (auto& v : hidden_bias_) ps.push_back(&v);
    for (auto& v : weights_) ps.push_back(&v);
    for (auto& v : bias_) ps.push_back(&v);
    return ps;
  }

  // Regularized training objective and its analytic gradient in the order of
  // parameter_view(). Used by fit() and by finite-difference tests.
  std::pair<double, std::vector<double>> loss_and_gradient(const TrainingCorpus& corpus,
                                                           double l2) const;

 private:
  ClassifierKind kind_ = ClassifierKind::Baseline;
  int k_ = 0;
  int dim_ = 0;
  int hidden_ = 0;
  bool degenerate_ = false;
  FeatureEncoder encoder_;
  std::vector<double> base_freq_;        // baseline
  std::vector<double> weights_, bias_;   // output layer (logistic: K x D)
  std::vector<double> hidden_weights_, hidden_bias_;  // perceptron only

  friend SplitClassifier fit_discriminative(const TrainingCorpus&, int, ClassifierKind,
                                            const FitOptions&);
};

inline std::pair<double, std::vector<double>> SplitClassifier::loss_and_gradient(
    const TrainingCorpus& corpus, double l2) const {
  const std::size_t n = corpus.rows.size();
  std::vector<double> g_hw(hidden_weights_.size(), 0.0), g_hb(hidden_bias_.size(), 0.0);
  std::vector<double> g_w(weights_.size(), 0.0), g_b(bias_.size(), 0.0);
  double loss = 0.0;
  for (const auto& row : corpus.rows) {
    auto feats = encoder_.encode(row.attributes);
    std::vector<double> h, p;
    if (kind_ == ClassifierKind::Perceptron) {
      h = hidden_bias_;
      for (int f : feats)
        for (int j = 0; j < hidden_; ++j) h[j] += hidden_weights_[j * dim_ + f];
      for (auto& v : h) v = std::tanh(v);
      std::vector<double> z(bias_);
      for (int c = 0; c < k_; ++c)
        for (int j = 0; j < hidden_; ++j) z[c] += weights_[c * hidden_ + j] * h[j];
      p = softmax(std::move(z));
    } else {
      std::vector<double> z(bias_);
      for (int f : feats)
        for (int c = 0; c < k_; ++c) z[c] += weights_[c * dim_ + f];
      p = softmax(std::move(z));
    }
    loss += -std::log(std::max(p[row.label], 1e-12));
    // dL/dz = p - onehot(label)
    std::vector<double> dz(p);
    dz[row.label] -= 1.0;
    if (kind_ == ClassifierKind::Perceptron) {
      std::vector<double> dh(hidden_, 0.0);
      for (int c = 0; c < k_; ++c) {
        g_b[c] += dz[c];
        for (int j = 0; j < hidden_; ++j) {
          g_w[c * hidden_ + j] += dz[c] * h[j];
          dh[j] += dz[c] * weights_[c * hidden_ + j];
        }
      }
      for (int j = 0; j < hidden_; ++j) {
        const double da = dh[j] * (1.0 - h[j] * h[j]);
        g_hb[j] += da;
        for (int f : feats) g_hw[j * dim_ + f] += da;
      }
    } else {
      for (int c = 0; c < k_; ++c) {
        g_b[c] += dz[c];
        for (int f : feats) g_w[c * dim_ + f] += dz[c];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  for (auto& v : g_hw) v *= inv_n;
  for (auto& v : g_hb) v *= inv_n;
  for (auto& v : g_w) v *= inv_n;
  for (auto& v : g_b) v *= inv_n;
  // L2 on weights only, not biases
  for (std::size_t i = 0; i < hidden_weights_.size(); ++i) {
    loss += 0.5 * l2 * hidden_weights_[i] * hidden_weights_[i];
    g_hw[i] += l2 * hidden_weights_[i];
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    loss += 0.5 * l2 * weights_[i] * weights_[i];
    g_w[i] += l2 * weights_[i];
  }
  std::vector<double> grad;
  grad.reserve(g_hw.size() + g_hb.size() + g_w.size() + g_b.size());
  for (auto& g : {std::cref(g_hw), std::cref(g_hb), std::cref(g_w), std::cref(g_b)})
    grad.insert(grad.end(), g.get().begin(), g.get().end());
  return {loss, std::move(grad)};
}

inline SplitClassifier SplitClassifier::fit(const TrainingCorpus& corpus, int class_count,
                                            ClassifierKind kind, const FitOptions& opts) {
  if (corpus.rows.empty()) throw EmptyCorpus("fit on empty corpus");
  for (const auto& row : corpus.rows)
    if (row.label < 0 || row.label >= class_count)
      throw ValidationError("label out of range");

  std::set<int> distinct;
  for (const auto& row : corpus.rows) distinct.insert(row.label);

  SplitClassifier m;
  m.kind_ = kind;
  m.k_ = class_count;

  if (kind == ClassifierKind::Baseline) {
    m.base_freq_.assign(class_count, 0.0);
    for (const auto& row : corpus.rows) m.base_freq_[row.label] += 1.0;
    for (auto& v : m.base_freq_) v /= static_cast<double>(corpus.rows.size());
    return m;
  }

  std::vector<std::map<std::string, std::string>> attr_rows;
  attr_rows.reserve(corpus.rows.size());
  for (const auto& row : corpus.rows) attr_rows.push_back(row.attributes);
  m.encoder_ = FeatureEncoder::build(attr_rows);
  m.dim_ = static_cast<int>(m.encoder_.dimension());

  if (distinct.size() < 2) {
    // One-hot-smoothed constant predictor; flagged, not an error.
    m.degenerate_ = true;
    m.kind_ = ClassifierKind::Baseline;
    const double eps = 1e-6;
    m.base_freq_.assign(class_count, class_count > 1 ? eps / (class_count - 1) : 0.0);
    m.base_freq_[*distinct.begin()] = class_count > 1 ? 1.0 - eps : 1.0;
    return m;
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  if (kind == ClassifierKind::Perceptron) {
    m.hidden_ = opts.hidden;
    m.hidden_weights_.resize(static_cast<std::size_t>(m.hidden_) * m.dim_);
    m.hidden_bias_.assign(m.hidden_, 0.0);
    for (auto& v : m.hidden_weights_) v = init(rng);
    m.weights_.resize(static_cast<std::size_t>(class_count) * m.hidden_);
    for (auto& v : m.weights_) v = init(rng);
  } else {
    m.weights_.assign(static_cast<std::size_t>(class_count) * m.dim_, 0.0);
  }
  m.bias_.assign(class_count, 0.0);

  // full-batch gradient descent, fixed step
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto [loss, grad] = m.loss_and_gradient(corpus, opts.l2);
    (void)loss;
    std::size_t g = 0;
    for (auto& v : m.hidden_weights_) v -= opts.step * grad[g++];
    for (auto& v : m.hidden_bias_) v -= opts.step * grad[g++];
    for (auto& v : m.weights_) v -= opts.step * grad[g++];
    for (auto& v : m.bias_) v -= opts.step * grad[g++];
  }
  return m;
}

// ---- serialization ----------------------------------------------------------

namespace detail {
// %.17g round-trips doubles exactly through decimal text.
inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
  os << v.size();
  os << std::setprecision(17);
  for (double x : v) os << " " << x;
  os << "\n";
}
inline std::vector<double> read_doubles(std::istream& is) {
  std::size_t n = 0;
  is >> n;
  std::vector<double> v(n);
  for (auto& x : v) is >> x;
  return v;
}
}  // namespace detail

inline void SplitClassifier::save(std::ostream& os) const {
  os << "walloc-model 1\n";
  const char* kind = kind_ == ClassifierKind::Baseline     ? "baseline"
                     : kind_ == ClassifierKind::Logistic   ? "logistic"
                                                           : "perceptron";
  os << "kind " << kind << "\n";
  os << "classes " << k_ << "\n";
  os << "hidden " << hidden_ << "\n";
  os << "degenerate " << (degenerate_ ? 1 : 0) << "\n";
  encoder_.save(os);
  detail::write_doubles(os, base_freq_);
  detail::write_doubles(os, hidden_weights_);
  detail::write_doubles(os, hidden_bias_);
  detail::write_doubles(os, weights_);
  detail::write_doubles(os, bias_);
}

inline SplitClassifier SplitClassifier::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "walloc-model" || version != 1)
    throw ParseError(1, "not a walloc model file");
  SplitClassifier m;
  std::string tag, kind;
  is >> tag >> kind;
  m.kind_ = kind == "baseline"   ? ClassifierKind::Baseline
            : kind == "logistic" ? ClassifierKind::Logistic
                                 : ClassifierKind::Perceptron;
  int deg = 0;
  is >> tag >> m.k_ >> tag >> m.hidden_ >> tag >> deg;
  m.degenerate_ = deg != 0;
  m.encoder_ = FeatureEncoder::load(is);
  m.dim_ = static_cast<int>(m.encoder_.dimension());
  m.base_freq_ = detail::read_doubles(is);
  m.hidden_weights_ = detail::read_doubles(is);
  m.hidden_bias_ = detail::read_doubles(is);
  m.weights_ = detail::read_doubles(is);
  m.bias_ = detail::read_doubles(is);
  return m;
}

// ---- partition registry -----------------------------------------------------

// One model per (article_type, gender), with a global fallback for pairs
// never seen in training.
class ModelRegistry {
 public:
  void add(const std::string& article_type, const std::string& gender, SplitClassifier m) {
    models_[{article_type, gender}] = std::move(m);
  }
  void set_global(SplitClassifier m) { global_ = std::move(m); has_global_ = true; }

  const SplitClassifier& select(const Sku& sku) const {
    auto it = models_.find({sku.article_type, sku.gender});
    if (it != models_.end()) return it->second;
    if (has_global_) return global_;
    throw ValidationError("no model for (" + sku.article_type + ", " + sku.gender +
                          ") and no global fallback");
  }

  std::size_t partition_count() const { return models_.size(); }

  void save(std::ostream& os) const {
    os << "walloc-registry 1\n";
    os << "partitions " << models_.size() << " global " << (has_global_ ? 1 : 0) << "\n";
    for (const auto& [key, m] : models_) {
      os << "partition " << key.first << " " << key.second << "\n";
      m.save(os);
    }
    if (has_global_) global_.save(os);
  }

  static ModelRegistry load(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "walloc-registry" || version != 1)
      throw ParseError(1, "not a walloc registry file");
    ModelRegistry r;
    std::string tag;
    std::size_t count = 0;
    int has_global = 0;
    is >> tag >> count >> tag >> has_global;
    for (std::size_t i = 0; i < count; ++i) {
      std::string at, g;
      is >> tag >> at >> g;
      r.models_[{at, g}] = SplitClassifier::load(is);
    }
    if (has_global) r.set_global(SplitClassifier::load(is));
    return r;
  }

 private:
  std::map<std::pair<std::string, std::string>, SplitClassifier> models_;
  SplitClassifier global_;
  bool has_global_ = false;
};

// Row i = predict_proba of sku_i.
template <typename ModelOrRegistry>
SplitProbabilityMatrix build_split_matrix(const ModelOrRegistry& model,
                                          const PurchaseOrder& po, int class_count) {
  SplitProbabilityMatrix p(po.lines.size(), class_count);
  for (std::size_t i = 0; i < po.lines.size(); ++i) {
    std::vector<double> row;
    if constexpr (std::is_same_v<ModelOrRegistry, ModelRegistry>)
      row = model.select(po.lines[i].sku).predict_proba(po.lines[i].sku);
    else
      row = model.predict_proba(po.lines[i].sku);
    for (int j = 0; j < class_count; ++j) p(i, j) = row[j];
  }
  return p;
}

}  // namespace walloc
