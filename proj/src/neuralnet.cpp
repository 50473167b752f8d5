#include "leoho/neuralnet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

// ---- DenseNet ---------------------------------------------------------------

DenseNet::DenseNet(std::vector<int> dims, Activation output_activation)
    : dims_(std::move(dims)), output_activation_(output_activation) {
  if (dims_.size() < 2) throw ShapeError("a dense network needs at least input and output dims");
  for (int d : dims_)
    if (d <= 0) throw ShapeError("layer dims must be positive");
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(dims_[l] + 1) * dims_[l + 1];
  }
  params_.assign(off, 0.0);
}

RowMatrixMap DenseNet::weight(std::size_t l) {
  return RowMatrixMap(params_.data() + offsets_.at(l), dims_[l + 1], dims_[l]);
}

ConstRowMatrixMap DenseNet::weight(std::size_t l) const {
  return ConstRowMatrixMap(params_.data() + offsets_.at(l), dims_[l + 1], dims_[l]);
}

VectorMap DenseNet::bias(std::size_t l) {
  return VectorMap(params_.data() + offsets_.at(l) + static_cast<std::size_t>(dims_[l]) * dims_[l + 1],
                   dims_[l + 1]);
}

ConstVectorMap DenseNet::bias(std::size_t l) const {
  return ConstVectorMap(
      params_.data() + offsets_.at(l) + static_cast<std::size_t>(dims_[l]) * dims_[l + 1], dims_[l + 1]);
}

void DenseNet::initialize(Rng& rng) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / dims_[l]);
    std::uniform_real_distribution<double> u(-limit, limit);
    auto w = weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    bias(l).setZero();
  }
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& input) const {
  Cache cache;
  return forward(input, cache);
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& input, Cache& cache) const {
  if (input.rows() != input_dim())
    throw ShapeError("input has " + std::to_string(input.rows()) + " rows, network expects " +
                     std::to_string(input_dim()));
  cache.activations.clear();
  cache.activations.reserve(layer_count() + 1);
  cache.activations.push_back(input);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    // products use owned copies so the rounding does not depend on buffer addresses
    const Eigen::MatrixXd w = weight(l);
    Eigen::MatrixXd z = w * cache.activations.back();
    z.colwise() += bias(l);
    const bool relu = l + 1 < layer_count() || output_activation_ == Activation::relu;
    if (relu) z = z.cwiseMax(0.0);
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

Eigen::MatrixXd DenseNet::backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                                   std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");
  Eigen::MatrixXd g = grad_output;
  for (std::size_t l = layer_count(); l-- > 0;) {
    const bool relu = l + 1 < layer_count() || output_activation_ == Activation::relu;
    if (relu) g = g.cwiseProduct((cache.activations[l + 1].array() > 0.0).cast<double>().matrix());
    RowMatrixMap gw(grad.data() + offsets_[l], dims_[l + 1], dims_[l]);
    VectorMap gb(grad.data() + offsets_[l] + static_cast<std::size_t>(dims_[l]) * dims_[l + 1], dims_[l + 1]);
    const Eigen::MatrixXd dw = g * cache.activations[l].transpose();
    const Eigen::VectorXd db = g.rowwise().sum();
    gw += dw;
    gb += db;
    const Eigen::MatrixXd w = weight(l);
    g = w.transpose() * g;
  }
  return g;
}

// ---- DuelingQNet ------------------------------------------------------------

namespace {

std::vector<int> concat_dims(int first, const std::vector<int>& mid, int last) {
  std::vector<int> d{first};
  d.insert(d.end(), mid.begin(), mid.end());
  if (last > 0) d.push_back(last);
  return d;
}

}  // namespace

DuelingQNet::DuelingQNet(int input_dim, int actions, const std::vector<int>& trunk_hidden,
                         const std::vector<int>& stream_hidden) {
  if (trunk_hidden.empty()) throw ShapeError("dueling trunk needs at least one hidden layer");
  trunk_ = DenseNet(concat_dims(input_dim, trunk_hidden, 0), Activation::relu);
  value_ = DenseNet(concat_dims(trunk_.output_dim(), stream_hidden, 1));
  advantage_ = DenseNet(concat_dims(trunk_.output_dim(), stream_hidden, actions));
  check_shapes();
}

DuelingQNet::DuelingQNet(DenseNet trunk, DenseNet value, DenseNet advantage)
    : trunk_(std::move(trunk)), value_(std::move(value)), advantage_(std::move(advantage)) {
  check_shapes();
}

void DuelingQNet::check_shapes() const {
  if (value_.input_dim() != trunk_.output_dim() || advantage_.input_dim() != trunk_.output_dim())
    throw ShapeError("value and advantage streams must consume the trunk output");
  if (value_.output_dim() != 1) throw ShapeError("value stream must output a scalar");
}

std::size_t DuelingQNet::parameter_count() const {
  return trunk_.parameter_count() + value_.parameter_count() + advantage_.parameter_count();
}

std::vector<double> DuelingQNet::flat_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const DenseNet* n : {&trunk_, &value_, &advantage_})
    p.insert(p.end(), n->parameters().begin(), n->parameters().end());
  return p;
}

void DuelingQNet::set_flat_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
  std::size_t off = 0;
  for (DenseNet* n : {&trunk_, &value_, &advantage_}) {
    auto dst = n->parameters();
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
    off += dst.size();
  }
}

void DuelingQNet::initialize(Rng& rng) {
  trunk_.initialize(rng);
  value_.initialize(rng);
  advantage_.initialize(rng);
}

namespace {

// Column-wise mean of A over valid rows; falls back to all rows when a column has none.
Eigen::RowVectorXd masked_mean(const Eigen::MatrixXd& a, const Eigen::MatrixXd* masks) {
  if (!masks) return a.colwise().mean();
  Eigen::RowVectorXd out(a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double n = masks->col(c).sum();
    out(c) = n > 0.0 ? a.col(c).cwiseProduct(masks->col(c)).sum() / n : a.col(c).mean();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd DuelingQNet::q_values(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd* masks) const {
  if (masks && (masks->rows() != actions() || masks->cols() != inputs.cols()))
    throw ShapeError("mask matrix shape does not match actions x batch");
  const Eigen::MatrixXd h = trunk_.forward(inputs);
  const Eigen::MatrixXd v = value_.forward(h);
  Eigen::MatrixXd a = advantage_.forward(h);
  const Eigen::RowVectorXd mean = masked_mean(a, masks);
  a.rowwise() -= mean;
  a.rowwise() += v.row(0);
  return a;
}

Eigen::VectorXd DuelingQNet::state_values(const Eigen::MatrixXd& inputs) const {
  return value_.forward(trunk_.forward(inputs)).row(0).transpose();
}

std::vector<double> DuelingQNet::forward(std::span<const double> observation) const {
  const Eigen::MatrixXd x = ConstVectorMap(observation.data(), static_cast<Eigen::Index>(observation.size()));
  const Eigen::MatrixXd q = q_values(x);
  return {q.data(), q.data() + q.size()};
}

std::vector<double> DuelingQNet::forward(std::span<const double> observation,
                                         std::span<const std::uint8_t> mask) const {
  if (static_cast<int>(mask.size()) != actions()) throw ShapeError("mask length must equal action count");
  const Eigen::MatrixXd x = ConstVectorMap(observation.data(), static_cast<Eigen::Index>(observation.size()));
  Eigen::MatrixXd m(actions(), 1);
  for (int i = 0; i < actions(); ++i) m(i, 0) = mask[i] ? 1.0 : 0.0;
  const Eigen::MatrixXd q = q_values(x, &m);
  return {q.data(), q.data() + q.size()};
}

LossGradient DuelingQNet::loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& masks,
                                            std::span<const int> actions_taken,
                                            std::span<const double> targets) const {
  const Eigen::Index n = inputs.cols();
  if (n == 0) throw InputError("loss over an empty batch");
  if (static_cast<Eigen::Index>(actions_taken.size()) != n || static_cast<Eigen::Index>(targets.size()) != n)
    throw ShapeError("actions and targets must have one entry per batch column");
  if (masks.rows() != actions() || masks.cols() != n) throw ShapeError("mask matrix shape mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions_taken[i];
    if (a < 0 || a >= actions()) throw InputError("action index " + std::to_string(a) + " out of range");
    if (masks(a, i) == 0.0) throw InputError("action index " + std::to_string(a) + " is masked");
  }

  DenseNet::Cache tc, vc, ac;
  const Eigen::MatrixXd h = trunk_.forward(inputs, tc);
  const Eigen::MatrixXd v = value_.forward(h, vc);
  const Eigen::MatrixXd a = advantage_.forward(h, ac);
  const Eigen::RowVectorXd mean = masked_mean(a, &masks);

  LossGradient out;
  Eigen::MatrixXd dv(1, n);
  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(actions(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int act = actions_taken[i];
    const double q = v(0, i) + a(act, i) - mean(i);
    const double diff = q - targets[i];
    out.loss += diff * diff;
    const double dq = 2.0 * diff / static_cast<double>(n);
    dv(0, i) = dq;
    const double valid = masks.col(i).sum();
    for (int j = 0; j < actions(); ++j) da(j, i) = -dq * (valid > 0.0 ? masks(j, i) / valid : 1.0 / actions());
    da(act, i) += dq;
  }
  out.loss /= static_cast<double>(n);

  out.gradient.assign(parameter_count(), 0.0);
  std::span<double> g(out.gradient);
  const std::size_t nt = trunk_.parameter_count(), nv = value_.parameter_count();
  Eigen::MatrixXd dh = value_.backward(vc, dv, g.subspan(nt, nv));
  dh += advantage_.backward(ac, da, g.subspan(nt + nv));
  trunk_.backward(tc, dh, g.subspan(0, nt));
  return out;
}

LossGradient DuelingQNet::loss_and_gradient(std::span<const QSample> batch) const {
  if (batch.empty()) throw InputError("loss over an empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(input_dim(), n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(actions(), n);
  std::vector<int> acts;
  std::vector<double> ys;
  for (Eigen::Index i = 0; i < n; ++i) {
    const QSample& s = batch[i];
    if (static_cast<int>(s.observation.size()) != input_dim()) throw ShapeError("observation length mismatch");
    x.col(i) = ConstVectorMap(s.observation.data(), input_dim());
    if (!s.mask.empty()) {
      if (static_cast<int>(s.mask.size()) != actions()) throw ShapeError("mask length mismatch");
      for (int j = 0; j < actions(); ++j) m(j, i) = s.mask[j] ? 1.0 : 0.0;
    }
    acts.push_back(s.action);
    ys.push_back(s.target);
  }
  return loss_and_gradient(x, m, acts, ys);
}

Eigen::MatrixXd batch_matrix(std::span<const std::span<const double>> columns, int rows) {
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (static_cast<int>(columns[i].size()) != rows) throw ShapeError("batch column length mismatch");
    x.col(static_cast<Eigen::Index>(i)) = ConstVectorMap(columns[i].data(), rows);
  }
  return x;
}

Eigen::MatrixXd mask_matrix(std::span<const std::span<const std::uint8_t>> columns, int rows) {
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (static_cast<int>(columns[i].size()) != rows) throw ShapeError("mask column length mismatch");
    for (int j = 0; j < rows; ++j) m(j, static_cast<Eigen::Index>(i)) = columns[i][j] ? 1.0 : 0.0;
  }
  return m;
}

int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask) {
  if (!mask.empty() && mask.size() != q.size()) throw ShapeError("mask length must equal Q length");
  int best = -1;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (best < 0 || q[i] > q[best]) best = static_cast<int>(i);
  }
  return best;
}

// ---- Adam -------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ShapeError("optimizer state, parameters and gradient differ in length");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw TrainingError("non-finite gradient at parameter " + std::to_string(i) + " (value " +
                          std::to_string(grad[i]) + ") after " + std::to_string(steps_) + " steps");
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
}

void AdamOptimizer::step(DuelingQNet& net, std::span<const double> grad) {
  std::vector<double> p = net.flat_parameters();
  step(std::span<double>(p), grad);
  net.set_flat_parameters(p);
}

// ---- checkpoints ------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'L', 'E', 'O', 'H', 'O', 'Q', 'N', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::istream& is) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == EOF) throw ConfigError("checkpoint truncated");
    v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const DuelingQNet& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  for (const DenseNet* n : {&net.trunk(), &net.value_stream(), &net.advantage_stream()}) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n->dims().size()));
    for (int d : n->dims()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(n->output_activation()));
  }
  const auto params = net.flat_parameters();
  put_le<std::uint64_t>(os, params.size());
  for (double p : params) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(p));
  if (!os) throw ConfigError("failed writing checkpoint: " + path.string());
}

DuelingQNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ConfigError("not a checkpoint file: " + path.string());
  std::array<DenseNet, 3> nets;
  for (auto& n : nets) {
    const auto count = get_le<std::uint32_t>(is);
    if (count < 2 || count > 64) throw ConfigError("checkpoint has an implausible layer count");
    std::vector<int> dims;
    for (std::uint32_t i = 0; i < count; ++i) dims.push_back(static_cast<int>(get_le<std::uint32_t>(is)));
    const auto act = get_le<std::uint8_t>(is);
    if (act > 1) throw ConfigError("checkpoint has an unknown activation code");
    n = DenseNet(dims, static_cast<Activation>(act));
  }
  DuelingQNet net(std::move(nets[0]), std::move(nets[1]), std::move(nets[2]));
  const auto count = get_le<std::uint64_t>(is);
  if (count != net.parameter_count()) throw ConfigError("checkpoint parameter count does not match its dims");
  std::vector<double> params(count);
  for (auto& p : params) p = std::bit_cast<double>(get_le<std::uint64_t>(is));
  net.set_flat_parameters(params);
  return net;
}

// ---- gradient check ---------------------------------------------------------

GradCheckReport gradient_check(const DuelingQNet& net, std::span<const QSample> batch, double step) {
  const LossGradient analytic = net.loss_and_gradient(batch);
  DuelingQNet probe = net;
  std::vector<double> params = probe.flat_parameters();
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    probe.set_flat_parameters(params);
    const double up = probe.loss_and_gradient(batch).loss;
    params[i] = saved - step;
    probe.set_flat_parameters(params);
    const double down = probe.loss_and_gradient(batch).loss;
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.gradient[i];
    const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
    report.max_relative_error = std::max(report.max_relative_error, rel);
    ++report.parameters_checked;
  }
  return report;
}

}  // namespace leoho
