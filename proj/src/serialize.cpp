#include "effectmap/serialize.hpp"

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"
#include "effectmap/error.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace effectmap {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string join_csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      out += c;
      continue;
    }
    out += '"';
    for (char ch : c) {
      if (ch == '"') out += '"';
      out += ch;
    }
    out += '"';
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

namespace {

void dump_value(const nlohmann::json& v, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += pretty ? ": " : ":";
        dump_value(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_value(e, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_number(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& value, int indent) {
  std::string out;
  dump_value(value, indent, 0, out);
  return out;
}

FactorSpace space_from_json(const nlohmann::json& doc) {
  try {
    std::vector<Factor> factors;
    for (const auto& f : doc.at("factors")) {
      Factor factor;
      factor.name = f.at("name").get<std::string>();
      for (const auto& l : f.at("levels")) factor.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
      factors.push_back(std::move(factor));
    }
    return FactorSpace(std::move(factors));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("invalid factor space declaration: ") + e.what());
  }
}

nlohmann::json space_to_json(const FactorSpace& space) {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : space.factors()) factors.push_back({{"name", f.name}, {"levels", f.levels}});
  return {{"factors", factors}};
}

FactorSpace load_space(const std::filesystem::path& path) { return space_from_json(read_json_file(path)); }

namespace {

nlohmann::json interval_json(const Interval& iv) { return {{"lo", iv.lo}, {"hi", iv.hi}, {"se", iv.se}}; }

std::string cell_key(const FactorSpace& space, std::size_t j, std::size_t k, Eigen::Index a, Eigen::Index b) {
  return space.factor(j).levels[static_cast<std::size_t>(a)] + "|" + space.factor(k).levels[static_cast<std::size_t>(b)];
}

}  // namespace

nlohmann::json table_to_json(const EffectTable& t) {
  const FactorSpace& space = t.space;
  nlohmann::json doc;
  doc["mu"] = t.mu;
  doc["provenance"] = std::string(provenance_name(t.provenance));
  doc["space"] = space_to_json(space);
  nlohmann::json mains = nlohmann::json::object(), pairs = nlohmann::json::object();
  nlohmann::json unsupported = nlohmann::json::array();
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    nlohmann::json m = nlohmann::json::object();
    for (std::size_t l = 0; l < space.levels(j); ++l) {
      m[space.factor(j).levels[l]] = t.mains[j](l);
      if (t.main_unsupported[j][l]) unsupported.push_back(space.factor(j).name + "=" + space.factor(j).levels[l]);
    }
    mains[space.factor(j).name] = m;
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    nlohmann::json m = nlohmann::json::object();
    for (Eigen::Index a = 0; a < t.pairs[p].rows(); ++a)
      for (Eigen::Index b = 0; b < t.pairs[p].cols(); ++b) {
        m[cell_key(space, j, k, a, b)] = t.pairs[p](a, b);
        if (t.pair_unsupported[p](a, b)) unsupported.push_back(space.pair_name(p) + "=" + cell_key(space, j, k, a, b));
      }
    pairs[space.pair_name(p)] = m;
  }
  doc["mains"] = mains;
  doc["pairs"] = pairs;
  doc["unsupported"] = unsupported;
  if (t.support) {
    const SupportCounts& s = *t.support;
    nlohmann::json levels = nlohmann::json::object(), cells = nlohmann::json::object(), eff = nlohmann::json::object();
    for (std::size_t j = 0; j < space.dimension(); ++j)
      for (std::size_t l = 0; l < space.levels(j); ++l)
        levels[space.factor(j).name][space.factor(j).levels[l]] = s.level[j](l);
    for (std::size_t p = 0; p < space.pair_count(); ++p) {
      auto [j, k] = space.pair_factors(p);
      for (Eigen::Index a = 0; a < s.pair[p].rows(); ++a)
        for (Eigen::Index b = 0; b < s.pair[p].cols(); ++b) {
          cells[space.pair_name(p)][cell_key(space, j, k, a, b)] = s.pair[p](a, b);
          eff[space.pair_name(p)][cell_key(space, j, k, a, b)] = s.pair_effective[p](a, b);
        }
    }
    doc["support"] = {{"records", s.records}, {"levels", levels}, {"pairs", cells}, {"effective", eff}};
  } else {
    doc["support"] = nullptr;
  }
  if (t.intervals) {
    const EffectIntervals& ci = *t.intervals;
    nlohmann::json mains_ci = nlohmann::json::object(), pairs_ci = nlohmann::json::object(),
                   means_ci = nlohmann::json::object();
    for (std::size_t j = 0; j < space.dimension(); ++j)
      for (std::size_t l = 0; l < space.levels(j); ++l) {
        mains_ci[space.factor(j).name][space.factor(j).levels[l]] = interval_json(ci.mains[j][l]);
        means_ci[space.factor(j).name][space.factor(j).levels[l]] = interval_json(ci.level_means[j][l]);
      }
    for (std::size_t p = 0; p < space.pair_count(); ++p) {
      auto [j, k] = space.pair_factors(p);
      const auto cols = t.pairs[p].cols();
      for (Eigen::Index a = 0; a < t.pairs[p].rows(); ++a)
        for (Eigen::Index b = 0; b < cols; ++b)
          pairs_ci[space.pair_name(p)][cell_key(space, j, k, a, b)] =
              interval_json(ci.pairs[p][static_cast<std::size_t>(a * cols + b)]);
    }
    doc["ci"] = {{"level", ci.level},        {"replicates", ci.replicates}, {"mu", interval_json(ci.mu)},
                 {"mains", mains_ci},        {"pairs", pairs_ci},           {"level_means", means_ci}};
  } else {
    doc["ci"] = nullptr;
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::io_error, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(Errc::io_error, "cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::io_error, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace effectmap
