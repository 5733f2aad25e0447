#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fullfields/io.hpp"
#include "fullfields/tensor.hpp"

namespace ff {

// Checkpoint archive: a tag ("vqudf/1", "lt/1"), a JSON config block, and
// named f64 tensors. Written little-endian.
struct CheckpointData {
  std::string tag;
  nlohmann::json config;
  std::map<std::string, Tensor> tensors;
};

inline void save_checkpoint(const std::filesystem::path& path, const std::string& tag,
                            const nlohmann::json& config,
                            const std::vector<const Tensor*>& tensors) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("FFCK", 4);
    detail::write_pod(out, uint32_t(1));
    auto write_str = [&](const std::string& s) {
      detail::write_pod(out, uint32_t(s.size()));
      out.write(s.data(), std::streamsize(s.size()));
    };
    write_str(tag);
    write_str(config.dump());
    detail::write_pod(out, uint32_t(tensors.size()));
    for (const Tensor* t : tensors) {
      write_str(t->name);
      detail::write_pod(out, uint32_t(t->shape.size()));
      for (size_t d : t->shape) detail::write_pod(out, uint64_t(d));
      out.write(reinterpret_cast<const char*>(t->v.data()),
                std::streamsize(t->v.size() * sizeof(double)));
    }
  }, /*binary=*/true);
}

inline CheckpointData load_checkpoint(const std::filesystem::path& path,
                                      const std::string& expected_tag = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  detail::expect_magic(in, "FFCK", path.string());
  uint32_t version = detail::read_pod<uint32_t>(in);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  auto read_str = [&]() {
    uint32_t len = detail::read_pod<uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    return s;
  };
  CheckpointData ck;
  ck.tag = read_str();
  if (!expected_tag.empty() && ck.tag != expected_tag)
    throw std::runtime_error("checkpoint tag mismatch: expected '" + expected_tag + "', found '" +
                             ck.tag + "' in " + path.string());
  ck.config = nlohmann::json::parse(read_str());
  uint32_t count = detail::read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = read_str();
    uint32_t ndim = detail::read_pod<uint32_t>(in);
    std::vector<size_t> shape(ndim);
    for (auto& d : shape) d = size_t(detail::read_pod<uint64_t>(in));
    Tensor t(name, shape);
    in.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(t.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    ck.tensors.emplace(name, std::move(t));
  }
  return ck;
}

inline std::string shape_string(const std::vector<size_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

// Copy archived values into live model tensors, failing loudly on any
// missing name or dimension difference.
inline void restore_tensors(const CheckpointData& ck, const std::vector<Tensor*>& params) {
  for (Tensor* t : params) {
    auto it = ck.tensors.find(t->name);
    if (it == ck.tensors.end())
      throw std::runtime_error("checkpoint is missing tensor '" + t->name + "'");
    if (it->second.shape != t->shape)
      throw std::runtime_error("tensor '" + t->name + "' shape mismatch: model wants " +
                               shape_string(t->shape) + ", checkpoint has " +
                               shape_string(it->second.shape));
    t->v = it->second.v;
  }
}

}  // namespace ff
