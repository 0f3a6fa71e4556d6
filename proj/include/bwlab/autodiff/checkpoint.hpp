#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bwlab/autodiff/parameters.hpp"
#include "bwlab/autodiff/tensor.hpp"
#include "bwlab/error.hpp"

namespace bwlab::ad {

/// On-disk layout:
///
///   BWLAB-CHECKPOINT 1\n
///   {"step_count":..,"rng":{..},"meta":{..},"tensors":[{"name":..,"shape":[..]},..]}\n
///   <little-endian float64 payload of each tensor, in header order>
struct Checkpoint {
  static constexpr const char* kMagic = "BWLAB-CHECKPOINT 1";

  std::uint64_t step_count = 0;
  std::map<std::string, std::string> rng;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(std::string name, Tensor t) { tensors.emplace_back(std::move(name), std::move(t)); }

  void add(const ParameterSet& params) {
    for (const auto& p : params) add(p.name, p.value);
  }

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }

  const Tensor& at(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw ShapeError(name, "checkpoint has no tensor named '" + name + "'");
  }

  /// Copies stored values into `params`, checking every name and shape.
  void load_into(ParameterSet& params) const {
    for (auto& p : params) {
      const auto& t = at(p.name);
      if (t.shape() != p.value.shape()) {
        throw ShapeError(p.name, "tensor '" + p.name + "' has shape " + shape_string(t.shape()) +
                                     " in checkpoint but " + shape_string(p.value.shape()) + " in the model");
      }
      p.value = t;
    }
  }
};

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["step_count"] = ckpt.step_count;
  header["rng"] = ckpt.rng;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.tensors) header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << Checkpoint::kMagic << '\n' << header.dump() << '\n';
  for (const auto& [name, t] : ckpt.tensors) {
    for (double v : t.storage()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
      out.write(bytes, 8);
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != Checkpoint::kMagic) throw std::runtime_error("not a checkpoint file: " + path.string());
  std::getline(in, header_line);
  const auto header = nlohmann::json::parse(header_line);

  Checkpoint ckpt;
  ckpt.step_count = header.at("step_count").get<std::uint64_t>();
  ckpt.rng = header.at("rng").get<std::map<std::string, std::string>>();
  ckpt.meta = header.at("meta");
  for (const auto& entry : header.at("tensors")) {
    auto shape = entry.at("shape").get<Shape>();
    Tensor t(shape);
    for (auto& v : t.storage()) {
      unsigned char bytes[8];
      in.read(reinterpret_cast<char*>(bytes), 8);
      if (!in) throw std::runtime_error("truncated checkpoint payload: " + path.string());
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

}  // namespace bwlab::ad
