#include "stance/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace stance {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");
static_assert(std::numeric_limits<float>::is_iec559);

[[noreturn]] void fail(const std::string& what) { throw CheckpointError("STNC1 checkpoint: " + what); }

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) fail("truncated payload");
  return value;
}

std::string get_bytes(std::istream& in, std::size_t n) {
  if (n > (1u << 24)) fail("implausible string length " + std::to_string(n));
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) fail("truncated payload");
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::map<std::string, std::string> encode_hyperparams(const Hyperparams& hp) {
  return {
      {"max_len", std::to_string(hp.max_len)},
      {"embed_dim", std::to_string(hp.embed_dim)},
      {"hidden", std::to_string(hp.hidden)},
      {"lambda", format_double(hp.lambda)},
      {"sinkhorn_iters", std::to_string(hp.sinkhorn_iters)},
      {"sinkhorn_tol", format_double(hp.sinkhorn_tol)},
      {"filter", std::to_string(hp.filter)},
      {"channels", std::to_string(hp.channels[0]) + "," + std::to_string(hp.channels[1]) + "," +
                       std::to_string(hp.channels[2])},
      {"variant", std::string(variant_name(hp.variant))},
  };
}

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) fail("bad value for " + key + ": '" + std::string(text) + "'");
  return v;
}

Hyperparams decode_hyperparams(const std::map<std::string, std::string>& kv) {
  Hyperparams hp;
  const std::set<std::string> known = {"max_len", "embed_dim",      "hidden", "lambda",  "sinkhorn_iters",
                                       "sinkhorn_tol", "filter", "channels", "variant"};
  for (const auto& [k, v] : kv)
    if (!known.contains(k)) fail("unknown hyperparameter '" + k + "'");
  for (const auto& k : known)
    if (!kv.contains(k)) fail("missing hyperparameter '" + k + "'");

  hp.max_len = parse_number<std::size_t>("max_len", kv.at("max_len"));
  hp.embed_dim = parse_number<std::size_t>("embed_dim", kv.at("embed_dim"));
  hp.hidden = parse_number<std::size_t>("hidden", kv.at("hidden"));
  hp.lambda = parse_number<double>("lambda", kv.at("lambda"));
  hp.sinkhorn_iters = parse_number<std::size_t>("sinkhorn_iters", kv.at("sinkhorn_iters"));
  hp.sinkhorn_tol = parse_number<double>("sinkhorn_tol", kv.at("sinkhorn_tol"));
  hp.filter = parse_number<std::size_t>("filter", kv.at("filter"));
  const std::string& ch = kv.at("channels");
  std::size_t from = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t comma = k < 2 ? ch.find(',', from) : ch.size();
    if (comma == std::string::npos) fail("bad value for channels: '" + ch + "'");
    hp.channels[k] = parse_number<std::size_t>("channels", std::string_view(ch).substr(from, comma - from));
    from = comma + 1;
  }
  auto variant = parse_variant(kv.at("variant"));
  if (!variant) fail("unknown variant '" + kv.at("variant") + "'");
  hp.variant = *variant;
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return hp;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams& params) {
  out.write(kCheckpointMagic, 5);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.vocab.entries().size()));
  for (const auto& [cp, id] : params.vocab.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cp));
    put<std::uint32_t>(out, id);
  }
  const auto hp = encode_hyperparams(params.hp);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(hp.size()));
  for (const auto& [k, v] : hp) {
    put_string(out, k);
    put_string(out, v);
  }
  const auto tensors = params.named();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (Real x : t.data()) {
      const auto f = static_cast<float>(x);
      if (static_cast<Real>(f) != x && std::isfinite(x))
        throw CheckpointError("STNC1 checkpoint: tensor " + name + " holds a value not representable as float");
      put<float>(out, f);
    }
  }
  if (!out) throw CheckpointError("STNC1 checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("STNC1 checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(out, params);
}

ModelParams load_checkpoint(std::istream& in) {
  char magic[5] = {};
  if (!in.read(magic, 5)) fail("truncated payload");
  if (std::memcmp(magic, kCheckpointMagic, 5) != 0) fail("unknown magic (expected STNC1)");

  const auto n_vocab = get<std::uint32_t>(in);
  if (n_vocab > (1u << 22)) fail("implausible vocabulary size");
  std::vector<std::pair<char32_t, std::uint32_t>> entries;
  for (std::uint32_t i = 0; i < n_vocab; ++i) {
    const auto cp = get<std::uint32_t>(in);
    const auto id = get<std::uint32_t>(in);
    entries.emplace_back(static_cast<char32_t>(cp), id);
  }
  Vocabulary vocab;
  try {
    vocab = Vocabulary::from_entries(entries);
  } catch (const std::invalid_argument& e) {
    fail(std::string("bad vocabulary: ") + e.what());
  }

  const auto n_hp = get<std::uint32_t>(in);
  std::map<std::string, std::string> kv;
  for (std::uint32_t i = 0; i < n_hp; ++i) {
    std::string k = get_bytes(in, get<std::uint32_t>(in));
    std::string v = get_bytes(in, get<std::uint32_t>(in));
    if (!kv.emplace(std::move(k), std::move(v)).second) fail("duplicate hyperparameter");
  }
  const Hyperparams hp = decode_hyperparams(kv);

  // A fresh model fixes which tensors must appear and their shapes.
  ModelParams params = ModelParams::init(hp, std::move(vocab), 0);
  std::map<std::string, Shape> expected;
  for (const auto& [name, t] : params.named()) expected.emplace(name, t.shape());

  const auto n_tensors = get<std::uint32_t>(in);
  if (n_tensors != expected.size())
    fail("expected " + std::to_string(expected.size()) + " tensors, found " + std::to_string(n_tensors));
  std::set<std::string> loaded;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = get_bytes(in, get<std::uint16_t>(in));
    auto it = expected.find(name);
    if (it == expected.end()) fail("unexpected tensor '" + name + "'");
    if (!loaded.insert(name).second) fail("tensor '" + name + "' appears twice");
    const auto rank = get<std::uint8_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint32_t>(in);
    if (shape != it->second)
      fail("tensor '" + name + "' has shape " + shape_string(shape) + ", configuration needs " +
           shape_string(it->second));
    std::vector<Real> values(shape_size(shape));
    for (Real& v : values) v = get<float>(in);
    params.set(name, Tensor::from(shape, std::move(values), true));
  }
  return params;
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("STNC1 checkpoint: cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace stance
