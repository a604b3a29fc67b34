#include "trustlab/params.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace trustlab {

namespace {

std::string encode_hex(const Eigen::MatrixXd& m) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 16);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto bits = std::bit_cast<std::uint64_t>(m(r, c));
      for (int i = 15; i >= 0; --i) out.push_back(digits[(bits >> (4 * i)) & 0xF]);
    }
  }
  return out;
}

Eigen::MatrixXd decode_hex(const std::string& hex, Eigen::Index rows,
                           Eigen::Index cols) {
  if (hex.size() != static_cast<std::size_t>(rows * cols) * 16)
    throw Error("checkpoint: payload length mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 16; ++i) {
        const char ch = hex[at++];
        bits <<= 4;
        if (ch >= '0' && ch <= '9') bits |= static_cast<std::uint64_t>(ch - '0');
        else if (ch >= 'a' && ch <= 'f') bits |= static_cast<std::uint64_t>(ch - 'a' + 10);
        else throw Error("checkpoint: invalid hex digit");
      }
      m(r, c) = std::bit_cast<double>(bits);
    }
  }
  return m;
}

}  // namespace

void ParamSet::add(const std::string& name, Eigen::MatrixXd value) {
  if (has(name)) throw Error("duplicate parameter name: " + name);
  entries_.emplace_back(name, std::move(value));
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& [n, _] : entries_)
    if (n == name) return true;
  return false;
}

Eigen::MatrixXd& ParamSet::at(const std::string& name) {
  for (auto& [n, v] : entries_)
    if (n == name) return v;
  throw Error("no such parameter: " + name);
}

const Eigen::MatrixXd& ParamSet::at(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw Error("no such parameter: " + name);
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : entries_) n += static_cast<std::size_t>(v.size());
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [n, v] : entries_)
    out.add(n, Eigen::MatrixXd::Zero(v.rows(), v.cols()));
  return out;
}

bool ParamSet::same_shapes(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first) return false;
    if (entries_[i].second.rows() != other.entries_[i].second.rows()) return false;
    if (entries_[i].second.cols() != other.entries_[i].second.cols()) return false;
  }
  return true;
}

AdamState make_adam_state(const ParamSet& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (!params.same_shapes(grads)) throw Error("adam_step: shape mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.t);
  for (auto& [name, p] : params) {
    const auto& g = grads.at(name);
    auto& m = state.m.at(name);
    auto& v = state.v.at(name);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.array().square().matrix();
    p.array() -= cfg.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + cfg.epsilon);
  }
}

void save_checkpoint(const std::string& path, const std::string& model,
                     const std::string& config_json, const ParamSet& params) {
  nlohmann::json j;
  j["format"] = "trustlab-checkpoint";
  j["version"] = 1;
  j["model"] = model;
  j["config"] = nlohmann::json::parse(config_json);
  auto arrays = nlohmann::json::array();
  for (const auto& [name, v] : params) {
    nlohmann::json a;
    a["name"] = name;
    a["rows"] = v.rows();
    a["cols"] = v.cols();
    a["data"] = encode_hex(v);
    arrays.push_back(std::move(a));
  }
  j["params"] = std::move(arrays);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint " + path + ": " + e.what());
  }
  try {
    if (j.at("format") != "trustlab-checkpoint") throw Error("not a checkpoint file");
    if (j.at("version") != 1)
      throw Error("unsupported checkpoint version in " + path);
    Checkpoint ck;
    ck.model = j.at("model");
    ck.config_json = j.at("config").dump();
    for (const auto& a : j.at("params"))
      ck.params.add(a.at("name"),
                    decode_hex(a.at("data"), a.at("rows").get<Eigen::Index>(),
                               a.at("cols").get<Eigen::Index>()));
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint " + path + ": " + e.what());
  }
}

}  // namespace trustlab
