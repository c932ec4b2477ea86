#include "dabid/neuralnet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dabid {

void GradientSet::set_zero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden) : sizes_(std::move(sizes)), hidden_(hidden) {
  if (sizes_.size() < 2) {
    throw ValidationError("an MLP needs at least input and output sizes");
  }
  for (int s : sizes_) {
    if (s <= 0) throw ValidationError("layer sizes must be positive");
  }
  for (std::size_t i = 1; i < sizes_.size(); ++i) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes_[i], sizes_[i - 1]), Eigen::VectorXd::Zero(sizes_[i])});
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  if (input.size() != input_size()) {
    throw ValidationError("MLP input has " + std::to_string(input.size()) + " values, expected " +
                          std::to_string(input_size()));
  }
  Eigen::VectorXd a = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXd z = layers_[i].weight * a + layers_[i].bias;
    a = (i + 1 < layers_.size() && hidden_ == Activation::kTanh) ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size()) {
    throw ValidationError("MLP batch has " + std::to_string(inputs.rows()) + " rows, expected " +
                          std::to_string(input_size()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = (layers_[i].weight * a).colwise() + layers_[i].bias;
    a = (i + 1 < layers_.size() && hidden_ == Activation::kTanh) ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return a;
}

GradientSet Mlp::backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grads) const {
  if (inputs.rows() != input_size() || output_grads.rows() != output_size() ||
      inputs.cols() != output_grads.cols()) {
    throw ValidationError("MLP backward shape mismatch");
  }
  // Activations of every layer, input first.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(inputs);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = (layers_[i].weight * acts.back()).colwise() + layers_[i].bias;
    if (i + 1 < layers_.size() && hidden_ == Activation::kTanh) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  GradientSet grads;
  grads.layers.resize(layers_.size());
  Eigen::MatrixXd delta = output_grads;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grads.layers[i].weight = delta * acts[i].transpose();
    grads.layers[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = layers_[i].weight.transpose() * delta;
      if (hidden_ == Activation::kTanh) {
        delta = delta.array() * (1.0 - acts[i].array().square());
      }
    }
  }
  return grads;
}

GradientSet Mlp::backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad) const {
  return backward(Eigen::MatrixXd(input), Eigen::MatrixXd(output_grad));
}

GradientSet Mlp::zero_gradients() const {
  GradientSet g;
  for (const auto& l : layers_) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

void orthogonal_init(Mlp& net, std::uint64_t seed, std::span<const double> gains) {
  auto& layers = net.layers();
  if (gains.size() != layers.size()) {
    throw ValidationError("orthogonal_init needs one gain per layer");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto rows = layers[i].weight.rows();
    const auto cols = layers[i].weight.cols();
    const bool transpose = rows < cols;
    const auto tall = transpose ? cols : rows;
    const auto wide = transpose ? rows : cols;
    Eigen::MatrixXd a(tall, wide);
    for (Eigen::Index c = 0; c < wide; ++c) {
      for (Eigen::Index r = 0; r < tall; ++r) a(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(wide).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < wide; ++c) {
      if (r(c, c) < 0.0) q.col(c) *= -1.0;
    }
    layers[i].weight = gains[i] * (transpose ? Eigen::MatrixXd(q.transpose()) : q);
    layers[i].bias.setZero();
  }
}

void rmsprop_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                  RmsPropState& state, const RmsPropConfig& config) {
  if (params.size() != grads.size()) {
    throw ValidationError("rmsprop: parameter and gradient block counts differ");
  }
  for (std::size_t b = 0; b < grads.size(); ++b) {
    if (grads[b].size() != params[b].size()) {
      throw ValidationError("rmsprop: block shape mismatch");
    }
    for (double g : grads[b]) {
      if (!std::isfinite(g)) throw TrainingDivergedError("non-finite gradient in RMSprop step");
    }
  }
  if (state.square_avg.empty()) {
    for (const auto& p : params) state.square_avg.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& v = state.square_avg[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      const auto k = static_cast<Eigen::Index>(i);
      v[k] = config.decay * v[k] + (1.0 - config.decay) * g * g;
      params[b][i] -= config.learning_rate * g / (std::sqrt(v[k]) + config.epsilon);
    }
  }
}

double clip_grad_norm(std::span<const std::span<double>> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& block : grads) {
    for (double g : block) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / (norm + 1e-6);
    for (const auto& block : grads) {
      for (double& g : block) g *= scale;
    }
  }
  return norm;
}

PolicyParams PolicyParams::create(int input_size, int hidden_width, double log_std_init, std::uint64_t seed) {
  PolicyParams p;
  p.actor = Mlp({input_size, hidden_width, kActionSize});
  p.critic = Mlp({input_size, hidden_width, 1});
  const double actor_gains[] = {1.0, 0.01};
  const double critic_gains[] = {1.0, 1.0};
  orthogonal_init(p.actor, derive_seed(seed, 1), actor_gains);
  orthogonal_init(p.critic, derive_seed(seed, 2), critic_gains);
  p.log_std = Eigen::VectorXd::Constant(kActionSize, log_std_init);
  return p;
}

PolicyGradients PolicyGradients::zeros_like(const PolicyParams& policy) {
  return {policy.actor.zero_gradients(), Eigen::VectorXd::Zero(policy.log_std.size()), policy.critic.zero_gradients()};
}

namespace {

template <typename Layers>
void append_layer_blocks(std::vector<std::span<double>>& out, Layers& layers) {
  for (auto& l : layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w(static_cast<std::size_t>(l.weight.size()));
    // Row-major on disk.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        w[static_cast<std::size_t>(r * l.weight.cols() + c)] = l.weight(r, c);
      }
    }
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"sizes", net.sizes()},
          {"activation", net.hidden_activation() == Activation::kTanh ? "tanh" : "identity"},
          {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  const auto activation = j.at("activation").get<std::string>();
  Mlp net(j.at("sizes").get<std::vector<int>>(), activation == "tanh" ? Activation::kTanh : Activation::kIdentity);
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers().size()) throw SchemaError("policy file: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = net.layers()[i];
    const auto w = layers[i].at("weight").get<std::vector<double>>();
    const auto b = layers[i].at("bias").get<std::vector<double>>();
    if (layers[i].at("rows").get<Eigen::Index>() != l.weight.rows() ||
        layers[i].at("cols").get<Eigen::Index>() != l.weight.cols() ||
        w.size() != static_cast<std::size_t>(l.weight.size()) || b.size() != static_cast<std::size_t>(l.bias.size())) {
      throw SchemaError("policy file: layer " + std::to_string(i) + " shape mismatch");
    }
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        l.weight(r, c) = w[static_cast<std::size_t>(r * l.weight.cols() + c)];
      }
    }
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  return net;
}

}  // namespace

std::vector<std::span<double>> parameter_blocks(Mlp& net) {
  std::vector<std::span<double>> out;
  append_layer_blocks(out, net.layers());
  return out;
}

std::vector<std::span<double>> gradient_blocks(GradientSet& grads) {
  std::vector<std::span<double>> out;
  append_layer_blocks(out, grads.layers);
  return out;
}

std::vector<std::span<double>> parameter_blocks(PolicyParams& policy) {
  std::vector<std::span<double>> out;
  append_layer_blocks(out, policy.actor.layers());
  out.emplace_back(policy.log_std.data(), static_cast<std::size_t>(policy.log_std.size()));
  append_layer_blocks(out, policy.critic.layers());
  return out;
}

std::vector<std::span<double>> gradient_blocks(PolicyGradients& grads) {
  std::vector<std::span<double>> out;
  append_layer_blocks(out, grads.actor.layers);
  out.emplace_back(grads.log_std.data(), static_cast<std::size_t>(grads.log_std.size()));
  append_layer_blocks(out, grads.critic.layers);
  return out;
}

std::string policy_to_json(const PolicyParams& policy) {
  const auto& n = policy.normalization;
  nlohmann::json j = {
      {"format", "dabid-policy"},
      {"version", 1},
      {"input_size", policy.input_size()},
      {"actor", mlp_to_json(policy.actor)},
      {"log_std", std::vector<double>(policy.log_std.data(), policy.log_std.data() + policy.log_std.size())},
      {"critic", mlp_to_json(policy.critic)},
      {"normalization",
       {{"price_scale", n.price_scale},
        {"consumption_scale", n.consumption_scale},
        {"max_wind_speed", n.max_wind_speed},
        {"temperature_min", n.temperature_min},
        {"temperature_max", n.temperature_max},
        {"include_weather", n.include_weather}}},
  };
  return j.dump();
}

PolicyParams policy_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("policy file: ") + e.what());
  }
  try {
    if (j.at("format") != "dabid-policy" || j.at("version") != 1) {
      throw SchemaError("unsupported policy file format/version");
    }
    PolicyParams p;
    p.actor = mlp_from_json(j.at("actor"));
    p.critic = mlp_from_json(j.at("critic"));
    const auto log_std = j.at("log_std").get<std::vector<double>>();
    p.log_std = Eigen::Map<const Eigen::VectorXd>(log_std.data(), static_cast<Eigen::Index>(log_std.size()));
    const auto& n = j.at("normalization");
    p.normalization.price_scale = n.at("price_scale").get<double>();
    p.normalization.consumption_scale = n.at("consumption_scale").get<double>();
    p.normalization.max_wind_speed = n.at("max_wind_speed").get<double>();
    p.normalization.temperature_min = n.at("temperature_min").get<double>();
    p.normalization.temperature_max = n.at("temperature_max").get<double>();
    p.normalization.include_weather = n.at("include_weather").get<bool>();
    if (p.actor.output_size() != kActionSize || p.log_std.size() != kActionSize || p.critic.output_size() != 1 ||
        p.critic.input_size() != p.actor.input_size()) {
      throw SchemaError("policy file: inconsistent actor/critic shapes");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("policy file: ") + e.what());
  }
}

void save_policy(const PolicyParams& policy, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << policy_to_json(policy) << '\n';
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open policy file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return policy_from_json(buffer.str());
}

}  // namespace dabid
