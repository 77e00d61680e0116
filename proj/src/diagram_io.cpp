#include "bratteli/diagram_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "bratteli/errors.hpp"

namespace bratteli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_u64(std::string_view s) {
  s = trim(s);
  if (s.empty()) throw ArgumentError("expected an integer");
  std::uint64_t value = 0;
  for (const char c : s) {
    if (c < '0' || c > '9') throw ArgumentError("expected an integer, got '" + std::string(s) + "'");
    if (__builtin_mul_overflow(value, 10u, &value) || __builtin_add_overflow(value, static_cast<unsigned>(c - '0'), &value)) {
      throw ArgumentError("integer too large: '" + std::string(s) + "'");
    }
  }
  return value;
}

// Splits "a, b(c, d), e" on top-level commas.
std::vector<std::string_view> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  int nesting = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++nesting;
    if (s[i] == ')') --nesting;
    if (s[i] == ',' && nesting == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

SizeRule SizeRule::parse(std::string_view text) {
  text = trim(text);
  SizeRule rule;
  rule.text_ = std::string(text);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ArgumentError("size rule '" + rule.text_ + "' needs a const:, poly: or list: prefix");
  const auto kind = text.substr(0, colon);
  const auto body = text.substr(colon + 1);
  if (kind == "const") {
    rule.kind_ = Kind::constant;
    rule.constant_ = parse_u64(body);
    if (rule.constant_ == 0) throw ArgumentError("level sizes must be positive");
  } else if (kind == "poly") {
    rule.kind_ = Kind::poly;
    rule.expr_ = IntExpr::parse(body);
  } else if (kind == "list") {
    rule.kind_ = Kind::list;
    for (const auto item : split_args(body)) rule.list_.push_back(parse_u64(item));
    if (rule.list_.empty() || rule.list_[0] != 1) throw ArgumentError("size list must start with the root size 1");
  } else {
    throw ArgumentError("unknown size rule kind '" + std::string(kind) + "'");
  }
  return rule;
}

std::vector<std::uint64_t> SizeRule::sizes(std::size_t depth) const {
  std::vector<std::uint64_t> out{1};
  if (kind_ == Kind::list) {
    if (depth + 1 > list_.size()) {
      throw ArgumentError("size list '" + text_ + "' has only " + std::to_string(list_.size()) + " levels");
    }
    out.assign(list_.begin(), list_.begin() + static_cast<std::ptrdiff_t>(depth + 1));
    return out;
  }
  for (std::size_t n = 1; n <= depth; ++n) {
    if (kind_ == Kind::constant) {
      out.push_back(constant_);
    } else {
      const auto value = expr_->evaluate(static_cast<std::int64_t>(n));
      if (value <= 0) throw ArgumentError("size rule '" + text_ + "' gives a non-positive size at level " + std::to_string(n));
      out.push_back(static_cast<std::uint64_t>(value));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Generator Generator::parse(std::string_view text) {
  text = trim(text);
  Generator g;
  const auto open = text.find('(');
  const auto name = trim(text.substr(0, open));
  std::vector<std::string_view> args;
  if (open != std::string_view::npos) {
    if (text.back() != ')') throw ArgumentError("generator '" + std::string(text) + "' is missing ')'");
    args = split_args(text.substr(open + 1, text.size() - open - 2));
  }
  if (name == "all_ones") {
    if (!args.empty()) throw ArgumentError("all_ones takes no arguments");
    g.kind_ = Kind::all_ones;
  } else if (name == "constant_rows") {
    if (args.size() != 1) throw ArgumentError("constant_rows takes one argument");
    g.kind_ = Kind::constant_rows;
    g.value_ = parse_u64(args[0]);
    if (g.value_ == 0) throw ArgumentError("constant_rows needs a positive entry");
  } else if (name == "cyclic") {
    if (args.size() != 1) throw ArgumentError("cyclic takes one argument");
    g.kind_ = Kind::cyclic;
    g.value_ = parse_u64(args[0]);
    if (g.value_ == 0) throw ArgumentError("cyclic needs a positive period");
  } else if (name == "diagonal_heavy") {
    if (args.size() != 2) throw ArgumentError("diagonal_heavy takes two arguments (a_n, b)");
    g.kind_ = Kind::diagonal_heavy;
    g.diagonal_ = IntExpr::parse(args[0]);
    g.value_ = parse_u64(args[1]);
  } else {
    throw ArgumentError("unknown generator '" + std::string(name) + "'");
  }
  return g;
}

IncidenceMatrix Generator::matrix(std::size_t n, std::size_t rows, std::size_t cols) const {
  switch (kind_) {
    case Kind::all_ones:
      return IncidenceMatrix::uniform(rows, cols, 1);
    case Kind::constant_rows:
      return IncidenceMatrix::uniform(rows, cols, value_);
    case Kind::cyclic: {
      std::vector<std::uint64_t> entries(rows * cols);
      for (std::size_t v = 0; v < rows; ++v) {
        for (std::size_t w = 0; w < cols; ++w) entries[v * cols + w] = 1 + (v + w) % value_;
      }
      return IncidenceMatrix::dense(rows, cols, std::move(entries));
    }
    case Kind::diagonal_heavy: {
      const auto a = diagonal_->evaluate(static_cast<std::int64_t>(n));
      if (a < 0) throw ArgumentError("diagonal_heavy gives a negative entry at level " + std::to_string(n));
      std::vector<std::uint64_t> entries(rows * cols, value_);
      for (std::size_t i = 0; i < std::min(rows, cols); ++i) entries[i * cols + i] = static_cast<std::uint64_t>(a);
      return IncidenceMatrix::dense(rows, cols, std::move(entries));
    }
  }
  throw ArgumentError("corrupt generator");
}

std::string Generator::text() const {
  switch (kind_) {
    case Kind::all_ones:
      return "all_ones";
    case Kind::constant_rows:
      return "constant_rows(" + std::to_string(value_) + ")";
    case Kind::cyclic:
      return "cyclic(" + std::to_string(value_) + ")";
    case Kind::diagonal_heavy:
      return "diagonal_heavy(" + diagonal_->text() + ", " + std::to_string(value_) + ")";
  }
  return {};
}

BratteliDiagram make_diagram(std::span<const std::uint64_t> level_sizes, const Generator& generator) {
  std::vector<std::uint64_t> sizes(level_sizes.begin(), level_sizes.end());
  std::vector<IncidenceMatrix> incidence;
  for (std::size_t n = 0; n + 1 < sizes.size(); ++n) {
    incidence.push_back(generator.matrix(n, static_cast<std::size_t>(sizes[n + 1]), static_cast<std::size_t>(sizes[n])));
  }
  return BratteliDiagram::build(std::move(sizes), std::move(incidence), generator.text());
}

BratteliDiagram make_diagram(const SizeRule& sizes, std::size_t depth, const Generator& generator) {
  const auto levels = sizes.sizes(depth);
  return make_diagram(levels, generator);
}

// ---------------------------------------------------------------------------

std::string emit_diagram(const BratteliDiagram& diagram) {
  nlohmann::ordered_json doc;
  doc["levels"] = std::vector<std::uint64_t>(diagram.level_sizes().begin(), diagram.level_sizes().end());
  if (!diagram.generator().empty()) {
    doc["generator"] = diagram.generator();
  } else {
    auto matrices = nlohmann::ordered_json::array();
    for (std::size_t n = 0; n + 1 < diagram.depth(); ++n) {
      const auto& f = diagram.incidence(n);
      auto rows = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < f.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < f.cols(); ++c) row.push_back(f.at(r, c));
        rows.push_back(std::move(row));
      }
      matrices.push_back(std::move(rows));
    }
    doc["incidence"] = std::move(matrices);
  }
  return doc.dump(2) + "\n";
}

BratteliDiagram parse_diagram(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DiagramError(std::string("diagram file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DiagramError("diagram file must hold an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "levels" && key != "incidence" && key != "generator") throw DiagramError("unknown diagram key '" + key + "'");
  }
  if (!doc.contains("levels")) throw DiagramError("diagram file needs 'levels'");
  if (doc.contains("incidence") == doc.contains("generator")) {
    throw DiagramError("diagram file needs exactly one of 'incidence' and 'generator'");
  }
  std::vector<std::uint64_t> sizes;
  try {
    sizes = doc.at("levels").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception&) {
    throw DiagramError("'levels' must be a list of non-negative integers");
  }
  if (doc.contains("generator")) {
    if (!doc["generator"].is_string()) throw DiagramError("'generator' must be a string");
    return make_diagram(sizes, Generator::parse(doc["generator"].get<std::string>()));
  }
  std::vector<IncidenceMatrix> incidence;
  const auto& matrices = doc["incidence"];
  if (!matrices.is_array()) throw DiagramError("'incidence' must be a list of matrices");
  for (std::size_t n = 0; n < matrices.size(); ++n) {
    const auto& rows = matrices[n];
    if (!rows.is_array()) throw DiagramError("incidence matrix " + std::to_string(n) + " must be a list of rows");
    std::vector<std::uint64_t> entries;
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::vector<std::uint64_t> row;
      try {
        row = rows[r].get<std::vector<std::uint64_t>>();
      } catch (const nlohmann::json::exception&) {
        throw DiagramError("incidence matrix " + std::to_string(n) + " row " + std::to_string(r) +
                           " must hold non-negative integers");
      }
      if (r == 0) cols = row.size();
      if (row.size() != cols) throw DiagramError("incidence matrix " + std::to_string(n) + " is ragged");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    incidence.push_back(IncidenceMatrix::dense(rows.size(), cols, std::move(entries)));
  }
  return BratteliDiagram::build(std::move(sizes), std::move(incidence));
}

BratteliDiagram load_diagram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read diagram file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_diagram(buffer.str());
}

void save_diagram(const BratteliDiagram& diagram, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write diagram file " + path.string());
  out << emit_diagram(diagram);
}

}  // namespace bratteli
