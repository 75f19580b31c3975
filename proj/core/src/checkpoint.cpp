#include "phn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "phn/errors.hpp"

namespace phn {

namespace {

using nlohmann::json;

void put_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) { put_u64_le(out, std::bit_cast<uint64_t>(d)); }

double get_f64_le(const unsigned char* p) { return std::bit_cast<double>(get_u64_le(p)); }

json layout_to_json(const ParamLayout& layout) {
  json entries = json::array();
  for (const auto& e : layout.entries()) {
    entries.push_back({{"name", e.name},
                       {"shape", e.shape},
                       {"init", e.init == InitKind::zero ? "zero" : "glorot"},
                       {"init_scale", e.init_scale}});
  }
  return entries;
}

ParamLayout layout_from_json(const json& entries) {
  ParamLayout layout;
  for (const auto& e : entries) {
    layout.add(e.at("name").get<std::string>(), e.at("shape").get<std::vector<int64_t>>(),
               e.at("init").get<std::string>() == "zero" ? InitKind::zero : InitKind::glorot,
               e.at("init_scale").get<double>());
  }
  return layout;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamVector& params) {
  json h;
  h["format_version"] = header.format_version;
  h["kind"] = header.kind;
  h["seed"] = header.seed;
  h["steps"] = header.steps;
  h["spec"] = header.spec_json.empty() ? json::object() : json::parse(header.spec_json);
  h["layout"] = layout_to_json(params.layout);
  const std::string header_text = h.dump();

  std::string blob;
  blob.reserve(sizeof(kCheckpointMagic) + 8 + header_text.size() + 8 * params.data.size());
  blob.append(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  put_u64_le(blob, header_text.size());
  blob.append(header_text);
  for (double v : params.data) put_f64_le(blob, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open checkpoint");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const size_t magic_len = sizeof(kCheckpointMagic) - 1;
  if (blob.size() < magic_len + 8 ||
      std::memcmp(blob.data(), kCheckpointMagic, magic_len) != 0) {
    throw IoError(path + ": not a checkpoint file");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const uint64_t header_len = get_u64_le(bytes + magic_len);
  if (blob.size() < magic_len + 8 + header_len) {
    throw IoError(path + ": truncated checkpoint header");
  }
  json h = json::parse(blob.substr(magic_len + 8, header_len));

  Checkpoint ckpt;
  ckpt.header.format_version = h.at("format_version").get<int>();
  if (ckpt.header.format_version != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint format_version " +
                  std::to_string(ckpt.header.format_version));
  }
  ckpt.header.kind = h.at("kind").get<std::string>();
  ckpt.header.seed = h.at("seed").get<uint64_t>();
  ckpt.header.steps = h.at("steps").get<uint64_t>();
  ckpt.header.spec_json = h.at("spec").dump();

  ckpt.params.layout = layout_from_json(h.at("layout"));
  const size_t n = ckpt.params.layout.total_size();
  const size_t data_off = magic_len + 8 + header_len;
  if (blob.size() - data_off != 8 * n) {
    throw IoError(path + ": parameter payload is " + std::to_string(blob.size() - data_off) +
                  " bytes, layout expects " + std::to_string(8 * n));
  }
  ckpt.params.data.resize(n);
  for (size_t i = 0; i < n; ++i) {
    ckpt.params.data[i] = get_f64_le(bytes + data_off + 8 * i);
  }
  return ckpt;
}

}  // namespace phn
