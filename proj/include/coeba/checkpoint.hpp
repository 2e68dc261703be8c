#pragma once

// Checkpoint file: a text header (format tag, encoder config, matrix shapes)
// followed by each matrix as raw little-endian doubles.
//
//   COEBA-CKPT 1
//   backbone=vgnae
//   ...
//   matrix W_hidden <rows> <cols>
//   <rows*cols*8 bytes>
//   ...
//   end

#include "coeba/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace coeba {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig config;
  EncoderParams params;
  Index feature_dim = 0;
};

namespace detail {

inline void write_matrix_block(std::ostream& out, const char* name, const Matrix& m) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(Real)));
  out << '\n';
}

inline Matrix read_matrix_block(std::istream& in, const std::string& path, const char* name) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": truncated before matrix " + name);
  const auto toks = split_ws(line);
  if (toks.size() != 4 || toks[0] != "matrix" || toks[1] != name) {
    throw DataError(path + ": expected 'matrix " + name + " <rows> <cols>', got '" + line + "'");
  }
  const auto r = parse_nonneg_int(toks[2]);
  const auto c = parse_nonneg_int(toks[3]);
  if (!r || !c) throw DataError(path + ": bad shape for matrix " + name);
  Matrix m(*r, *c);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Real)));
  if (!in) throw DataError(path + ": truncated payload for matrix " + name);
  in.get();  // trailing newline
  return m;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  const EncoderConfig& c = ck.config;
  out << "COEBA-CKPT " << kCheckpointVersion << '\n';
  out << "backbone=" << to_string(c.backbone) << '\n';
  out << "feature_dim=" << ck.feature_dim << '\n';
  out << "hidden_dim=" << c.hidden_dim << '\n';
  out << "out_dim=" << c.out_dim << '\n';
  out << "dropout=" << detail::format_real(c.dropout) << '\n';
  out << "K=" << c.appnp_steps << '\n';
  out << "beta=" << detail::format_real(c.appnp_teleport) << '\n';
  out << "scale=" << detail::format_real(c.norm_scale) << '\n';
  detail::write_matrix_block(out, "W_hidden", ck.params.w_hidden);
  detail::write_matrix_block(out, "W_mu", ck.params.w_mu);
  detail::write_matrix_block(out, "W_logvar", ck.params.w_logvar);
  out << "end\n";
  if (!out) throw DataError("failed writing checkpoint " + path);
}

/// Loads and validates a checkpoint; matrix shapes must agree with the
/// stored config.
inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::string line;
  std::getline(in, line);
  if (line != "COEBA-CKPT " + std::to_string(kCheckpointVersion)) {
    throw DataError(path + ": unsupported checkpoint header '" + line + "'");
  }
  std::map<std::string, std::string> kv;
  while (in.peek() != 'm' && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(path + ": malformed header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(path + ": missing key " + key);
    return it->second;
  };
  auto get_int = [&](const char* key) {
    auto v = detail::parse_nonneg_int(get(key));
    if (!v) throw DataError(path + ": bad integer for " + key);
    return *v;
  };
  auto get_real = [&](const char* key) {
    auto v = detail::parse_real(get(key));
    if (!v) throw DataError(path + ": bad real for " + key);
    return *v;
  };

  Checkpoint ck;
  try {
    ck.config.backbone = parse_backbone(get("backbone"));
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
  ck.feature_dim = get_int("feature_dim");
  ck.config.hidden_dim = get_int("hidden_dim");
  ck.config.out_dim = get_int("out_dim");
  ck.config.dropout = get_real("dropout");
  ck.config.appnp_steps = static_cast<int>(get_int("K"));
  ck.config.appnp_teleport = get_real("beta");
  ck.config.norm_scale = get_real("scale");
  ck.params.w_hidden = detail::read_matrix_block(in, path, "W_hidden");
  ck.params.w_mu = detail::read_matrix_block(in, path, "W_mu");
  ck.params.w_logvar = detail::read_matrix_block(in, path, "W_logvar");
  std::getline(in, line);
  if (line != "end") throw DataError(path + ": missing end marker");
  ck.params.check_shapes(ck.feature_dim, ck.config);
  return ck;
}

}  // namespace coeba
