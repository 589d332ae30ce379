#include "dpl/dpl_surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dpl/errors.hpp"

namespace dpl {

namespace {

std::vector<int> layer_dims_for(int input_dim, const std::vector<int>& hidden, int output_dim) {
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  return dims;
}

// log of the power term b^-gamma, saturated at kMaxHeadLogFactor
struct PowerFactor {
  double value;
  bool saturated;
};

PowerFactor power_factor(double b_norm, double gamma) {
  const double log_factor = -gamma * std::log(b_norm);
  if (log_factor > kMaxHeadLogFactor) return {std::exp(kMaxHeadLogFactor), true};
  return {std::exp(log_factor), false};
}

void require_budget(double b_norm) {
  if (!(b_norm > 0.0)) {
    throw DomainError("normalized budget must be > 0, got " + std::to_string(b_norm));
  }
}

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  if (!in) throw DataError("rng_state", "unreadable generator state");
  return rng;
}

}  // namespace

// ---------------------------------------------------------------------------
// Power-law head

PowerLawCoefficients head_coefficients(std::span<const double, kRawHeadOutputs> raw) {
  return {raw[0], glu_gate(raw[1], raw[2]), glu_gate(raw[3], raw[4])};
}

double head_predict(std::span<const double, kRawHeadOutputs> raw, double b_norm) {
  require_budget(b_norm);
  const PowerLawCoefficients c = head_coefficients(raw);
  return c.alpha + c.beta * power_factor(b_norm, c.gamma).value;
}

std::array<double, kRawHeadOutputs> head_gradient(std::span<const double, kRawHeadOutputs> raw,
                                                  double b_norm) {
  require_budget(b_norm);
  const double s_beta = sigmoid(raw[2]);
  const double s_gamma = sigmoid(raw[4]);
  const double beta = raw[1] * s_beta;
  const double gamma = raw[3] * s_gamma;
  const PowerFactor u = power_factor(b_norm, gamma);
  const double d_beta = u.value;
  const double d_gamma = u.saturated ? 0.0 : -beta * std::log(b_norm) * u.value;
  return {1.0,
          d_beta * s_beta,
          d_beta * raw[1] * s_beta * (1.0 - s_beta),
          d_gamma * s_gamma,
          d_gamma * raw[3] * s_gamma * (1.0 - s_gamma)};
}

// ---------------------------------------------------------------------------
// Networks

DplNetwork::DplNetwork(int input_dim, const SurrogateArchitecture& arch)
    : body_(layer_dims_for(input_dim, arch.hidden, kRawHeadOutputs), arch.leaky_slope) {}

PowerLawCoefficients DplNetwork::coefficients(std::span<const double> config) const {
  const Vector raw = forward(body_, config);
  return head_coefficients(std::span<const double, kRawHeadOutputs>(raw.data(), kRawHeadOutputs));
}

Vector DplNetwork::predict(const Eigen::Ref<const Matrix>& configs,
                           std::span<const double> b_norm) const {
  if (static_cast<Eigen::Index>(b_norm.size()) != configs.cols()) {
    throw ShapeError("DplNetwork::predict: one budget per config expected");
  }
  const Matrix raw = forward(body_, configs);
  Vector out(configs.cols());
  for (Eigen::Index i = 0; i < configs.cols(); ++i) {
    out[i] = head_predict(std::span<const double, kRawHeadOutputs>(raw.col(i).data(), kRawHeadOutputs),
                          b_norm[i]);
  }
  return out;
}

double DplNetwork::loss_and_gradient(const Eigen::Ref<const Matrix>& configs,
                                     std::span<const double> b_norm,
                                     std::span<const double> targets, GradientBundle& grads) const {
  ForwardCache cache;
  const Matrix raw = forward(body_, configs, &cache);
  const Eigen::Index n = configs.cols();
  std::vector<double> preds(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    preds[i] = head_predict(std::span<const double, kRawHeadOutputs>(raw.col(i).data(), kRawHeadOutputs),
                            b_norm[i]);
  }
  const L1Loss l1 = l1_loss(preds, targets);
  Matrix d_raw(kRawHeadOutputs, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto g = head_gradient(
        std::span<const double, kRawHeadOutputs>(raw.col(i).data(), kRawHeadOutputs), b_norm[i]);
    for (int k = 0; k < kRawHeadOutputs; ++k) d_raw(k, i) = g[k] * l1.gradient[i];
  }
  grads = backward(body_, cache, d_raw);
  return l1.loss;
}

double predict_member(const DplNetwork& member, std::span<const double> config, double b_norm) {
  require_budget(b_norm);
  if (static_cast<int>(config.size()) != member.input_dim()) {
    throw ShapeError("predict_member: config dimension mismatch");
  }
  const Vector raw = forward(member.body(), config);
  return head_predict(std::span<const double, kRawHeadOutputs>(raw.data(), kRawHeadOutputs), b_norm);
}

ConditionedNetwork::ConditionedNetwork(int config_dim, const SurrogateArchitecture& arch)
    : body_(layer_dims_for(config_dim + 1, arch.hidden, 1), arch.leaky_slope) {}

namespace {

Matrix with_budget_row(const Eigen::Ref<const Matrix>& configs, std::span<const double> b_norm) {
  if (static_cast<Eigen::Index>(b_norm.size()) != configs.cols()) {
    throw ShapeError("one budget per config expected");
  }
  Matrix inputs(configs.rows() + 1, configs.cols());
  inputs.topRows(configs.rows()) = configs;
  for (Eigen::Index i = 0; i < configs.cols(); ++i) inputs(configs.rows(), i) = b_norm[i];
  return inputs;
}

}  // namespace

Vector ConditionedNetwork::predict(const Eigen::Ref<const Matrix>& configs,
                                   std::span<const double> b_norm) const {
  return forward(body_, with_budget_row(configs, b_norm)).row(0).transpose();
}

double ConditionedNetwork::loss_and_gradient(const Eigen::Ref<const Matrix>& configs,
                                             std::span<const double> b_norm,
                                             std::span<const double> targets,
                                             GradientBundle& grads) const {
  ForwardCache cache;
  const Matrix out = forward(body_, with_budget_row(configs, b_norm), &cache);
  const std::vector<double> preds(out.data(), out.data() + out.size());
  const L1Loss l1 = l1_loss(preds, targets);
  const Eigen::Map<const Matrix> d_out(l1.gradient.data(), 1, out.cols());
  grads = backward(body_, cache, d_out);
  return l1.loss;
}

double predict_conditioned_nn(const ConditionedNetwork& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.body().input_dim()) {
    throw ShapeError("predict_conditioned_nn: input must be the config with b_norm appended");
  }
  return forward(net.body(), input)[0];
}

double predict_conditioned_nn(const ConditionedNetwork& net, std::span<const double> config,
                              double b_norm) {
  std::vector<double> input(config.begin(), config.end());
  input.push_back(b_norm);
  return predict_conditioned_nn(net, input);
}

// ---------------------------------------------------------------------------
// Schedule

TrainerSchedule TrainerSchedule::for_curve_length(int lc_length) {
  TrainerSchedule schedule;
  schedule.restart_threshold_iterations =
      std::max(1, static_cast<int>(std::ceil(1.2 * static_cast<double>(lc_length) - 1e-9)));
  return schedule;
}

void TrainerSchedule::reset_stagnation() {
  iterations_since_improvement = 0;
  best_fit_loss = std::numeric_limits<double>::infinity();
}

bool should_restart(TrainerSchedule& schedule, double current_fit_loss) {
  if (!std::isfinite(current_fit_loss)) return true;
  if (current_fit_loss < schedule.best_fit_loss - 1e-9) {
    schedule.best_fit_loss = current_fit_loss;
    schedule.iterations_since_improvement = 0;
    return false;
  }
  schedule.iterations_since_improvement += 1;
  return schedule.iterations_since_improvement > schedule.restart_threshold_iterations;
}

// ---------------------------------------------------------------------------
// Training

template <typename Net>
double mean_absolute_error(const Net& net, const TrainingSet& data) {
  if (data.size() == 0) return 0.0;
  const Vector preds = net.predict(data.configs, data.budgets);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += std::abs(preds[i] - data.targets[i]);
  return total / static_cast<double>(data.size());
}

template <typename Net>
double train_network(Trainee<Net>& trainee, const TrainingSet& data, int epochs, int batch_size,
                     std::optional<std::size_t> newest, const BatchObserver& observer,
                     std::size_t member_index) {
  if (data.size() == 0) throw std::invalid_argument("train_network: empty training set");
  if (batch_size <= 0) throw std::invalid_argument("train_network: batch_size must be positive");
  if (newest && *newest >= data.size()) throw std::out_of_range("train_network: newest index");

  std::vector<std::size_t> order;
  order.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!newest || i != *newest) order.push_back(i);
  }

  const auto bs = static_cast<std::size_t>(batch_size);
  std::vector<std::size_t> batch;
  Matrix x;
  std::vector<double> b, y;
  GradientBundle grads;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle(order, trainee.rng);
    const std::size_t num_batches = order.empty() ? 1 : (order.size() + bs - 1) / bs;
    for (std::size_t k = 0; k < num_batches; ++k) {
      batch.clear();
      const std::size_t begin = k * bs;
      const std::size_t end = std::min(order.size(), begin + bs);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(order[i]);
      if (newest) batch.push_back(*newest);

      x.resize(data.dim(), static_cast<Eigen::Index>(batch.size()));
      b.resize(batch.size());
      y.resize(batch.size());
      for (std::size_t j = 0; j < batch.size(); ++j) {
        x.col(static_cast<Eigen::Index>(j)) = data.configs.col(static_cast<Eigen::Index>(batch[j]));
        b[j] = data.budgets[batch[j]];
        y[j] = data.targets[batch[j]];
      }
      trainee.net.loss_and_gradient(x, b, y, grads);
      adam_step(trainee.net.body(), grads, trainee.adam);
      if (observer) observer(member_index, batch);
    }
  }
  return mean_absolute_error(trainee.net, data);
}

template double train_network<DplNetwork>(Trainee<DplNetwork>&, const TrainingSet&, int, int,
                                          std::optional<std::size_t>, const BatchObserver&,
                                          std::size_t);
template double train_network<ConditionedNetwork>(Trainee<ConditionedNetwork>&,
                                                  const TrainingSet&, int, int,
                                                  std::optional<std::size_t>,
                                                  const BatchObserver&, std::size_t);
template double mean_absolute_error<DplNetwork>(const DplNetwork&, const TrainingSet&);
template double mean_absolute_error<ConditionedNetwork>(const ConditionedNetwork&,
                                                        const TrainingSet&);

// ---------------------------------------------------------------------------
// Ensemble

DplEnsemble::DplEnsemble(int input_dim, const EnsembleConfig& config)
    : input_dim_(input_dim), config_(config) {
  if (config.members < 1) throw std::invalid_argument("ensemble needs at least one member");
  members_.resize(static_cast<std::size_t>(config.members));
  for (auto& m : members_) {
    m.net = DplNetwork(input_dim, config.architecture);
    m.adam = AdamState(m.net.body().parameter_count(), config.learning_rate);
  }
}

std::uint64_t member_seed(std::uint64_t ensemble_seed, std::size_t k) {
  return derive_seed(ensemble_seed, 0x6d656d62ULL + k);
}

void reset_members(DplEnsemble& ensemble, std::uint64_t seed) {
  auto& members = ensemble.trainees();
  for (std::size_t k = 0; k < members.size(); ++k) {
    auto& m = members[k];
    m.seed = member_seed(seed, k);
    m.net.body() = init_weights(std::move(m.net.body()), m.seed);
    m.adam = AdamState(m.net.body().parameter_count(), ensemble.config().learning_rate);
    m.rng = Rng(derive_seed(m.seed, 1));
  }
}

double fit_loss(const DplEnsemble& ensemble, const TrainingSet& data) {
  double total = 0.0;
  for (const auto& m : ensemble.trainees()) total += mean_absolute_error(m.net, data);
  return total / static_cast<double>(ensemble.size());
}

double fit_initial(DplEnsemble& ensemble, const TrainingSet& data, const TrainerSchedule& schedule,
                   std::uint64_t seed, const BatchObserver& observer) {
  if (data.size() == 0) throw std::invalid_argument("fit_initial: empty history");
  reset_members(ensemble, seed);
  double total = 0.0;
  auto& members = ensemble.trainees();
  for (std::size_t k = 0; k < members.size(); ++k) {
    total += train_network(members[k], data, schedule.initial_epochs, schedule.batch_size,
                           std::nullopt, observer, k);
  }
  return total / static_cast<double>(members.size());
}

double refine(DplEnsemble& ensemble, const TrainingSet& data, std::size_t newest,
              const TrainerSchedule& schedule, const BatchObserver& observer) {
  double total = 0.0;
  auto& members = ensemble.trainees();
  for (std::size_t k = 0; k < members.size(); ++k) {
    total += train_network(members[k], data, schedule.refine_epochs, schedule.batch_size, newest,
                           observer, k);
  }
  return total / static_cast<double>(members.size());
}

Posterior posterior_from_predictions(std::span<const double> predictions) {
  if (predictions.empty()) throw std::invalid_argument("posterior: no member predictions");
  const double k = static_cast<double>(predictions.size());
  double mean = 0.0;
  for (double p : predictions) mean += p;
  mean /= k;
  const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
  if (*lo == *hi) return {*lo, 0.0};
  double variance = 0.0;
  for (double p : predictions) variance += (p - mean) * (p - mean);
  return {mean, variance / k};
}

Posterior posterior(const DplEnsemble& ensemble, std::span<const double> config, double b_norm) {
  std::vector<double> preds;
  preds.reserve(ensemble.size());
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    preds.push_back(predict_member(ensemble.member(k), config, b_norm));
  }
  return posterior_from_predictions(preds);
}

std::vector<Posterior> posterior_batch(const DplEnsemble& ensemble,
                                       const Eigen::Ref<const Matrix>& configs, double b_norm) {
  require_budget(b_norm);
  const auto n = static_cast<std::size_t>(configs.cols());
  const std::vector<double> budgets(n, b_norm);
  Matrix preds(static_cast<Eigen::Index>(ensemble.size()), configs.cols());
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    preds.row(static_cast<Eigen::Index>(k)) = ensemble.member(k).predict(configs, budgets).transpose();
  }
  std::vector<Posterior> out(n);
  std::vector<double> column(ensemble.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < ensemble.size(); ++k) {
      column[k] = preds(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    }
    out[i] = posterior_from_predictions(column);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json vector_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j, Eigen::Index expected, const std::string& path) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw DataError(path, "expected " + std::to_string(expected) + " values, got " +
                              std::to_string(values.size()));
  }
  return Eigen::Map<const Vector>(values.data(), expected);
}

}  // namespace

nlohmann::json ensemble_to_json(const DplEnsemble& ensemble, const TrainerSchedule& schedule) {
  nlohmann::json doc;
  doc["format"] = "dpl-ensemble";
  doc["version"] = kCheckpointVersion;
  doc["input_dim"] = ensemble.input_dim();
  doc["architecture"] = {{"hidden", ensemble.config().architecture.hidden},
                         {"leaky_slope", ensemble.config().architecture.leaky_slope}};
  doc["learning_rate"] = ensemble.config().learning_rate;
  doc["schedule"] = {
      {"initial_epochs", schedule.initial_epochs},
      {"refine_epochs", schedule.refine_epochs},
      {"initial_phase_iterations", schedule.initial_phase_iterations},
      {"restart_threshold_iterations", schedule.restart_threshold_iterations},
      {"batch_size", schedule.batch_size},
      {"iterations_since_improvement", schedule.iterations_since_improvement},
      // JSON has no infinity; null means "no fit yet"
      {"best_fit_loss", std::isfinite(schedule.best_fit_loss) ? nlohmann::json(schedule.best_fit_loss)
                                                              : nlohmann::json(nullptr)},
  };
  auto& members = doc["members"];
  members = nlohmann::json::array();
  for (const auto& m : ensemble.trainees()) {
    members.push_back({
        {"seed", m.seed},
        {"rng_state", rng_state(m.rng)},
        {"adam",
         {{"step_count", m.adam.step_count},
          {"first_moment", vector_json(m.adam.first_moment)},
          {"second_moment", vector_json(m.adam.second_moment)}}},
        {"parameters", vector_json(m.net.body().parameters())},
    });
  }
  return doc;
}

std::pair<DplEnsemble, TrainerSchedule> ensemble_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "dpl-ensemble") throw DataError("format", "not a dpl-ensemble document");
    if (doc.at("version") != kCheckpointVersion) {
      throw DataError("version", "unsupported checkpoint version " + doc.at("version").dump());
    }
    EnsembleConfig config;
    config.architecture.hidden = doc.at("architecture").at("hidden").get<std::vector<int>>();
    config.architecture.leaky_slope = doc.at("architecture").at("leaky_slope").get<double>();
    config.learning_rate = doc.at("learning_rate").get<double>();
    const auto& members_doc = doc.at("members");
    config.members = static_cast<int>(members_doc.size());
    DplEnsemble ensemble(doc.at("input_dim").get<int>(), config);

    const auto& s = doc.at("schedule");
    TrainerSchedule schedule;
    schedule.initial_epochs = s.at("initial_epochs").get<int>();
    schedule.refine_epochs = s.at("refine_epochs").get<int>();
    schedule.initial_phase_iterations = s.at("initial_phase_iterations").get<int>();
    schedule.restart_threshold_iterations = s.at("restart_threshold_iterations").get<int>();
    schedule.batch_size = s.at("batch_size").get<int>();
    schedule.iterations_since_improvement = s.at("iterations_since_improvement").get<int>();
    schedule.best_fit_loss = s.at("best_fit_loss").is_null()
                                 ? std::numeric_limits<double>::infinity()
                                 : s.at("best_fit_loss").get<double>();

    for (std::size_t k = 0; k < ensemble.size(); ++k) {
      const auto& md = members_doc.at(k);
      const std::string path = "members[" + std::to_string(k) + "]";
      auto& m = ensemble.trainees()[k];
      const auto n = static_cast<Eigen::Index>(m.net.body().parameter_count());
      m.seed = md.at("seed").get<std::uint64_t>();
      m.rng = rng_from_state(md.at("rng_state").get<std::string>());
      m.adam.step_count = md.at("adam").at("step_count").get<std::int64_t>();
      m.adam.first_moment = vector_from_json(md.at("adam").at("first_moment"), n, path + ".adam.first_moment");
      m.adam.second_moment = vector_from_json(md.at("adam").at("second_moment"), n, path + ".adam.second_moment");
      m.net.body().parameters() = vector_from_json(md.at("parameters"), n, path + ".parameters");
    }
    return {std::move(ensemble), schedule};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("", std::string("malformed ensemble checkpoint: ") + e.what());
  }
}

}  // namespace dpl
