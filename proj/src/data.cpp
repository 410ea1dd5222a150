#include "permreg/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string_view>

#include "permreg/featurize.hpp"

namespace permreg {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Malformed, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::size_t parse_header(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() < 2 || fields.back() != "target") {
    malformed(1, "header must be pos_1,...,pos_n,target");
  }
  for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
    if (fields[k] != "pos_" + std::to_string(k + 1)) {
      malformed(1, "expected column pos_" + std::to_string(k + 1));
    }
  }
  return fields.size() - 1;
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t bound) {
  // Reject the top sliver so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<Item> random_permutation(std::size_t n, Rng& rng) {
  std::vector<Item> items(n);
  for (std::size_t k = 0; k < n; ++k) items[k] = static_cast<Item>(k + 1);
  for (std::size_t k = n; k > 1; --k) {
    std::swap(items[k - 1], items[rng.below(k)]);
  }
  return items;
}

Dataset parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Malformed, "line 1: missing header");
  const std::size_t n = parse_header(line);
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n + 1) {
      malformed(line_no, "expected " + std::to_string(n + 1) + " fields, got " +
                             std::to_string(fields.size()));
    }
    std::vector<Item> items(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto f = fields[k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), items[k]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        malformed(line_no, "item field '" + std::string(f) + "' is not an integer");
      }
    }
    double target = 0.0;
    const auto tf = fields[n];
    auto [ptr, ec] = std::from_chars(tf.data(), tf.data() + tf.size(), target);
    if (ec == std::errc::result_out_of_range) {
      throw Error(ErrorCode::NonFiniteTarget, "line " + std::to_string(line_no) + ": target overflows");
    }
    if (ec != std::errc() || ptr != tf.data() + tf.size()) {
      malformed(line_no, "target '" + std::string(tf) + "' is not a number");
    }
    if (!std::isfinite(target)) {
      throw Error(ErrorCode::NonFiniteTarget, "line " + std::to_string(line_no) + ": target not finite");
    }
    try {
      rows.push_back({Permutation(std::move(items), n), target});
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Dataset(n, std::move(rows));
}

Dataset parse_csv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_csv(in);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  for (std::size_t k = 1; k <= dataset.n_items(); ++k) out << "pos_" << k << ',';
  out << "target\n";
  for (const auto& row : dataset.rows()) {
    for (Item item : row.perm.items()) out << item << ',';
    out << format_double(row.target) << '\n';
  }
}

std::string to_csv_string(const Dataset& dataset) {
  std::ostringstream out;
  write_csv(dataset, out);
  return out.str();
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_csv(dataset, out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Splits split(const Dataset& dataset, const SplitSpec& spec) {
  if (spec.train == 0 || spec.validation == 0 || spec.test == 0) {
    throw Error(ErrorCode::InvalidSpec, "split sizes must be positive");
  }
  const std::size_t need = spec.train + spec.validation + spec.test;
  if (need > dataset.size()) {
    throw Error(ErrorCode::InsufficientRows, "split needs " + std::to_string(need) +
                                                 " rows, dataset has " +
                                                 std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::derive(spec.seed, kShuffleStream));
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);

  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<Row> rows;
    rows.reserve(count);
    for (std::size_t i = from; i < from + count; ++i) rows.push_back(dataset[order[i]]);
    return Dataset(dataset.n_items(), std::move(rows));
  };
  return Splits{take(0, spec.train), take(spec.train, spec.validation),
                take(spec.train + spec.validation, spec.test)};
}

void PlantedSpec::validate() const {
  if (n_items < 2) throw Error(ErrorCode::InvalidSpec, "n_items must be at least 2");
  if (m_rows == 0) throw Error(ErrorCode::InvalidSpec, "m_rows must be positive");
  if (!std::isfinite(mu0)) throw Error(ErrorCode::InvalidSpec, "mu0 must be finite");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw Error(ErrorCode::InvalidSpec, "noise_sd must be finite and non-negative");
  }
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const auto& c = planted[i].constraint;
    if (c.size() > n_items) throw Error(ErrorCode::InvalidSpec, c.to_string() + " too long");
    for (Item item : c.items()) {
      if (item < 1 || static_cast<std::size_t>(item) > n_items) {
        throw Error(ErrorCode::InvalidSpec, c.to_string() + " names an item outside 1..n_items");
      }
    }
    if (!std::isfinite(planted[i].coefficient)) {
      throw Error(ErrorCode::InvalidSpec, "planted coefficient must be finite");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (planted[j].constraint == c) {
        throw Error(ErrorCode::InvalidSpec, c.to_string() + " planted twice");
      }
    }
  }
}

Dataset generate_planted(const PlantedSpec& spec) {
  spec.validate();
  Rng perm_rng(Rng::derive(spec.seed, kShuffleStream));
  Rng noise_rng(Rng::derive(spec.seed, kNoiseStream));
  std::vector<Row> rows;
  rows.reserve(spec.m_rows);
  for (std::size_t i = 0; i < spec.m_rows; ++i) {
    Permutation perm(random_permutation(spec.n_items, perm_rng), spec.n_items);
    double y = spec.mu0;
    for (const auto& term : spec.planted) {
      if (fulfills(perm, term.constraint)) y += term.coefficient;
    }
    if (spec.noise_sd > 0.0) y += spec.noise_sd * noise_rng.normal();
    rows.push_back({std::move(perm), y});
  }
  return Dataset(spec.n_items, std::move(rows));
}

}  // namespace permreg
