#include "epf/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "epf/error.hpp"

namespace epf {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

nlohmann::ordered_json tensor_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", encode_values(t.data())}};
}

Tensor tensor_from_json(const nlohmann::ordered_json& j) {
  return Tensor(j.at("shape").get<Shape>(), decode_values(j.at("data").get<std::string>()));
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = std::uint32_t{bytes[i]} << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::FormatError, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[static_cast<std::size_t>(k)] = 0;
        ++pad;
        continue;
      }
      if (pad) throw Error(ErrorCode::FormatError, "base64 padding in the middle");
      q[static_cast<std::size_t>(k)] = decode_char(c);
      if (q[static_cast<std::size_t>(k)] < 0) throw Error(ErrorCode::FormatError, "invalid base64 character");
    }
    const std::uint32_t v = (static_cast<std::uint32_t>(q[0]) << 18) | (static_cast<std::uint32_t>(q[1]) << 12) |
                            (static_cast<std::uint32_t>(q[2]) << 6) | static_cast<std::uint32_t>(q[3]);
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_values(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_values(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw Error(ErrorCode::FormatError, "parameter blob not a multiple of 8 bytes");
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string model_to_json(const ModelGraph& model) {
  nlohmann::ordered_json doc;
  doc["format"] = kModelFormat;
  doc["input_shape"] = model.input_shape();
  doc["rng_seed"] = model.rng_seed();
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : model.layers()) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(l.kind);
    j["hyper"] = {{"in", l.hyper.in},         {"out", l.hyper.out},   {"kernel", l.hyper.kernel},
                  {"stride", l.hyper.stride}, {"pool", l.hyper.pool}, {"rate", l.hyper.rate}};
    if (l.has_params()) {
      j["weights"] = tensor_json(l.weights);
      j["biases"] = tensor_json(l.biases);
    }
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

ModelGraph model_from_json(std::string_view text) {
  try {
    auto doc = nlohmann::ordered_json::parse(text);
    if (doc.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::FormatError, "unsupported model format '" +
                                              doc.at("format").get<std::string>() + "'");
    }
    std::vector<LayerParams> layers;
    for (const auto& j : doc.at("layers")) {
      auto kind = layer_kind_from_string(j.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::FormatError, "unknown layer kind " + j.at("kind").dump());
      LayerParams l;
      l.kind = *kind;
      const auto& h = j.at("hyper");
      l.hyper.in = h.at("in").get<std::size_t>();
      l.hyper.out = h.at("out").get<std::size_t>();
      l.hyper.kernel = h.at("kernel").get<std::size_t>();
      l.hyper.stride = h.at("stride").get<std::size_t>();
      l.hyper.pool = h.at("pool").get<std::size_t>();
      l.hyper.rate = h.at("rate").get<double>();
      if (j.contains("weights")) {
        l.weights = tensor_from_json(j.at("weights"));
        l.biases = tensor_from_json(j.at("biases"));
      }
      layers.push_back(std::move(l));
    }
    return ModelGraph(doc.at("input_shape").get<Shape>(), std::move(layers),
                      doc.at("rng_seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("model document: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace epf
