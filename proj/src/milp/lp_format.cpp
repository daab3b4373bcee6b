#include "meshreconf/milp/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace meshreconf::milp {
namespace {

constexpr std::size_t kMaxLineLength = 200;

std::string format_number(double value) {
  if (value == kInfinity) return "+inf";
  if (value == -kInfinity) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' ||
         c == '.' || c == '[' || c == ']';
}

// Writes "+ 2 x - 3 y ..." wrapping lines at kMaxLineLength.
class ExpressionWriter {
 public:
  ExpressionWriter(std::ostream& out, std::string prefix)
      : out_(out), line_(std::move(prefix)) {}

  void add(double coef, const std::string& name) {
    std::string piece = coef < 0.0 ? " - " : " + ";
    const double mag = std::abs(coef);
    if (mag != 1.0) piece += format_number(mag) + " ";
    piece += name;
    append(piece);
  }

  void add_constant(double value) {
    append((value < 0.0 ? " - " : " + ") + format_number(std::abs(value)));
  }

  void append(const std::string& piece) {
    if (line_.size() + piece.size() > kMaxLineLength) {
      out_ << line_ << '\n';
      line_ = "  ";
    }
    line_ += piece;
  }

  void finish(const std::string& tail) {
    append(tail);
    out_ << line_ << '\n';
  }

 private:
  std::ostream& out_;
  std::string line_;
};

}  // namespace

std::string sanitize_lp_name(std::string_view name) {
  std::string out;
  out.reserve(name.size() + 1);
  for (char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                          c == '.'
                      ? c
                      : '_');
  }
  if (out.empty()) return "_";
  const unsigned char first = static_cast<unsigned char>(out[0]);
  const bool exponent_like =
      (out[0] == 'e' || out[0] == 'E') &&
      (out.size() == 1 || std::isdigit(static_cast<unsigned char>(out[1])) ||
       out[1] == '.');
  if (std::isdigit(first) || out[0] == '.' || exponent_like) {
    out.insert(out.begin(), '_');
  }
  // Keywords that would be mistaken for section headers or bound tokens.
  std::string lower = out;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  static const std::unordered_set<std::string> kReserved = {
      "inf",      "infinity", "free",     "end",     "st",
      "bounds",   "bound",    "binaries", "binary",  "bin",
      "generals", "general",  "gen",      "integer", "integers",
      "minimize", "maximize", "min",      "max",     "minimum",
      "maximum",  "subject",  "such",     "s.t."};
  if (kReserved.count(lower) != 0) out.insert(out.begin(), '_');
  return out;
}

void write_lp(const Model& model, std::ostream& out) {
  const auto& vars = model.variables();
  std::vector<std::string> names(vars.size());
  std::unordered_set<std::string> used;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    std::string base = sanitize_lp_name(vars[j].name);
    std::string candidate = base;
    for (int n = 1; !used.insert(candidate).second; ++n) {
      candidate = base + "_" + std::to_string(n);
    }
    names[j] = std::move(candidate);
  }

  out << "\\ meshreconf LP export: " << vars.size() << " variables, "
      << model.num_constraints() << " constraints\n";
  out << "Minimize\n";
  {
    ExpressionWriter expr(out, " obj:");
    bool any = false;
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (model.objective()[j] == 0.0) continue;
      expr.add(model.objective()[j], names[j]);
      any = true;
    }
    if (model.objective_offset() != 0.0) {
      expr.add_constant(model.objective_offset());
      any = true;
    }
    if (!any) expr.append(" 0");
    expr.finish("");
  }

  out << "Subject To\n";
  std::unordered_set<std::string> row_names;
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    const LinearConstraint& row = model.constraints()[i];
    std::string base = sanitize_lp_name(row.name);
    std::string rname = base;
    for (int n = 1; !row_names.insert(rname).second; ++n) {
      rname = base + "_" + std::to_string(n);
    }
    ExpressionWriter expr(out, " " + rname + ":");
    if (row.terms.empty()) {
      expr.append(" 0");
    }
    for (const Term& t : row.terms) expr.add(t.coef, names[t.var.index]);
    std::string tail = " ";
    tail += to_string(row.sense);
    tail += " " + format_number(row.rhs);
    expr.finish(tail);
  }

  out << "Bounds\n";
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const Variable& v = vars[j];
    const std::string& n = names[j];
    if (v.domain == Domain::kBinary) {
      if (v.lower == 0.0 && v.upper == 1.0) continue;
      if (v.lower == v.upper) {
        out << " " << n << " = " << format_number(v.lower) << '\n';
      } else {
        out << " " << format_number(v.lower) << " <= " << n
            << " <= " << format_number(v.upper) << '\n';
      }
      continue;
    }
    if (v.lower == v.upper) {
      out << " " << n << " = " << format_number(v.lower) << '\n';
    } else if (v.lower == -kInfinity && v.upper == kInfinity) {
      out << " " << n << " free\n";
    } else if (v.upper == kInfinity) {
      out << " " << n << " >= " << format_number(v.lower) << '\n';
    } else {
      out << " " << format_number(v.lower) << " <= " << n
          << " <= " << format_number(v.upper) << '\n';
    }
  }

  bool header = false;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].domain != Domain::kInteger) continue;
    if (!header) out << "Generals\n";
    header = true;
    out << " " << names[j] << '\n';
  }
  header = false;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].domain != Domain::kBinary) continue;
    if (!header) out << "Binaries\n";
    header = true;
    out << " " << names[j] << '\n';
  }
  out << "End\n";
}

std::string write_lp(const Model& model) {
  std::ostringstream out;
  write_lp(model, out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Reader

namespace {

enum class Section { kNone, kObjective, kConstraints, kBounds, kGenerals,
                     kBinaries, kEnd };

enum class TokenKind { kNumber, kName, kSense, kSign, kColon, kEnd };

struct Token {
  TokenKind kind;
  std::string text;
  double number = 0.0;
  int line = 0;
};

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool parse_infinity(std::string_view word, double* value) {
  const std::string lw = lowercase(word);
  if (lw == "inf" || lw == "infinity") {
    *value = kInfinity;
    return true;
  }
  return false;
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view line, int line_no)
      : text_(line), line_no_(line_no) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (c == '\\') break;
      if (c == '<' || c == '>' || c == '=') {
        std::size_t j = i + 1;
        if (j < text_.size() && (text_[j] == '=' || text_[j] == '<' ||
                                 text_[j] == '>')) {
          ++j;
        }
        std::string s(text_.substr(i, j - i));
        std::string sense;
        if (s == "<" || s == "<=" || s == "=<") sense = "<=";
        else if (s == ">" || s == ">=" || s == "=>") sense = ">=";
        else if (s == "=" || s == "==") sense = "=";
        else throw LpParseError(line_no_, "bad operator '" + s + "'");
        tokens.push_back({TokenKind::kSense, sense, 0.0, line_no_});
        i = j;
        continue;
      }
      if (c == '+' || c == '-') {
        tokens.push_back({TokenKind::kSign, std::string(1, c), 0.0, line_no_});
        ++i;
        continue;
      }
      if (c == ':') {
        tokens.push_back({TokenKind::kColon, ":", 0.0, line_no_});
        ++i;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(std::string(text_.substr(i)), &used);
        } catch (const std::exception&) {
          throw LpParseError(line_no_, "bad number");
        }
        tokens.push_back({TokenKind::kNumber, std::string(text_.substr(i, used)),
                          v, line_no_});
        i += used;
        continue;
      }
      if (is_name_char(c) || std::ispunct(static_cast<unsigned char>(c))) {
        std::size_t j = i;
        while (j < text_.size() && !std::isspace(static_cast<unsigned char>(text_[j])) &&
               text_[j] != ':' && text_[j] != '<' && text_[j] != '>' &&
               text_[j] != '=' && text_[j] != '+' && text_[j] != '-' &&
               text_[j] != '\\') {
          ++j;
        }
        std::string word(text_.substr(i, j - i));
        double inf = 0.0;
        if (parse_infinity(word, &inf)) {
          tokens.push_back({TokenKind::kNumber, word, inf, line_no_});
        } else {
          tokens.push_back({TokenKind::kName, word, 0.0, line_no_});
        }
        i = j;
        continue;
      }
      throw LpParseError(line_no_, std::string("unexpected character '") + c + "'");
    }
    return tokens;
  }

 private:
  std::string_view text_;
  int line_no_;
};

struct PendingRow {
  std::string name;
  std::vector<std::pair<double, std::string>> terms;
  double constant = 0.0;
  bool has_sense = false;
  bool has_rhs = false;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  int line = 0;
};

class LpReader {
 public:
  Model read(std::istream& in) {
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      handle_line(raw, line_no);
      if (section_ == Section::kEnd) break;
    }
    flush_row();
    return build();
  }

 private:
  bool try_section(const std::string& raw, int line_no) {
    std::string lw = lowercase(raw);
    auto first = lw.find_first_not_of(" \t");
    if (first == std::string::npos) return false;
    lw = lw.substr(first);
    auto last = lw.find_last_not_of(" \t\r");
    lw = lw.substr(0, last + 1);
    auto starts = [&](std::string_view k) {
      return lw.rfind(k, 0) == 0 &&
             (lw.size() == k.size() || std::isspace(static_cast<unsigned char>(lw[k.size()])));
    };
    Section next = Section::kNone;
    std::string rest;
    if (starts("minimize") || starts("minimum") || starts("min")) {
      next = Section::kObjective;
      maximize_ = false;
    } else if (starts("maximize") || starts("maximum") || starts("max")) {
      next = Section::kObjective;
      maximize_ = true;
    } else if (lw == "subject to" || lw == "such that" || lw == "st" ||
               lw == "s.t.") {
      next = Section::kConstraints;
    } else if (lw == "bounds" || lw == "bound") {
      next = Section::kBounds;
    } else if (lw == "generals" || lw == "general" || lw == "gen" ||
               lw == "integers" || lw == "integer") {
      next = Section::kGenerals;
    } else if (lw == "binaries" || lw == "binary" || lw == "bin") {
      next = Section::kBinaries;
    } else if (lw == "end") {
      next = Section::kEnd;
    }
    if (next == Section::kNone) return false;
    flush_row();
    section_ = next;
    if (next == Section::kObjective) {
      // Anything after the keyword on the same line is objective text.
      auto space = lw.find_first_of(" \t");
      if (space != std::string::npos) {
        std::string tail = raw.substr(raw.find_first_not_of(" \t") + space);
        handle_tokens(Tokenizer(tail, line_no).run(), line_no);
      }
    }
    return true;
  }

  void handle_line(const std::string& raw, int line_no) {
    if (try_section(raw, line_no)) return;
    auto tokens = Tokenizer(raw, line_no).run();
    if (tokens.empty()) return;
    handle_tokens(tokens, line_no);
  }

  void handle_tokens(const std::vector<Token>& tokens, int line_no) {
    switch (section_) {
      case Section::kNone:
        throw LpParseError(line_no, "content before objective section");
      case Section::kObjective:
      case Section::kConstraints:
        feed_expression(tokens, line_no);
        break;
      case Section::kBounds:
        parse_bound(tokens, line_no);
        break;
      case Section::kGenerals:
      case Section::kBinaries:
        for (const Token& t : tokens) {
          if (t.kind != TokenKind::kName) {
            throw LpParseError(line_no, "expected variable name");
          }
          const int idx = var_index(t.text);
          if (section_ == Section::kGenerals) {
            domain_[idx] = Domain::kInteger;
          } else {
            domain_[idx] = Domain::kBinary;
          }
        }
        break;
      case Section::kEnd:
        break;
    }
  }

  // Expression lines may continue over several physical lines. A new row
  // starts at "name:" or after a completed "sense rhs" pair.
  void feed_expression(const std::vector<Token>& tokens, int line_no) {
    std::size_t i = 0;
    if (tokens.size() >= 2 && tokens[0].kind == TokenKind::kName &&
        tokens[1].kind == TokenKind::kColon) {
      flush_row();
      row_.name = tokens[0].text;
      row_.line = line_no;
      active_ = true;
      i = 2;
    }
    if (!active_) {
      row_ = PendingRow{};
      row_.line = line_no;
      active_ = true;
    }
    double sign = 1.0;
    std::optional<double> coef;
    for (; i < tokens.size(); ++i) {
      const Token& t = tokens[i];
      if (row_.has_sense) {
        // Right-hand side: optional sign then number.
        if (t.kind == TokenKind::kSign) {
          sign = t.text == "-" ? -1.0 : 1.0;
          continue;
        }
        if (t.kind != TokenKind::kNumber) {
          throw LpParseError(line_no, "expected right-hand side number");
        }
        row_.rhs = sign * t.number;
        row_.has_rhs = true;
        sign = 1.0;
        flush_row();
        continue;
      }
      switch (t.kind) {
        case TokenKind::kSign:
          if (coef) {
            row_.constant += sign * *coef;
            coef.reset();
          }
          if (t.text == "-") sign = -sign;
          break;
        case TokenKind::kNumber:
          if (coef) {
            row_.constant += sign * *coef;
            sign = 1.0;
          }
          coef = t.number;
          break;
        case TokenKind::kName:
          row_.terms.emplace_back(sign * coef.value_or(1.0), t.text);
          coef.reset();
          sign = 1.0;
          break;
        case TokenKind::kSense:
          if (section_ != Section::kConstraints) {
            throw LpParseError(line_no, "comparison in objective");
          }
          if (coef) {
            row_.constant += sign * *coef;
            coef.reset();
          }
          sign = 1.0;
          row_.has_sense = true;
          row_.sense = t.text == "<=" ? Sense::kLessEqual
                       : t.text == ">=" ? Sense::kGreaterEqual
                                        : Sense::kEqual;
          break;
        case TokenKind::kColon:
          throw LpParseError(line_no, "unexpected ':'");
        case TokenKind::kEnd:
          break;
      }
    }
    if (coef) row_.constant += sign * *coef;
  }

  void flush_row() {
    if (!active_) return;
    active_ = false;
    if (section_ == Section::kObjective || !row_.has_sense) {
      if (section_ == Section::kConstraints && !row_.terms.empty()) {
        throw LpParseError(row_.line, "constraint without comparison");
      }
      for (auto& [c, n] : row_.terms) {
        const int idx = var_index(n);
        objective_.emplace_back(c, idx);
      }
      objective_offset_ += row_.constant;
      row_ = PendingRow{};
      return;
    }
    if (!row_.has_rhs) {
      throw LpParseError(row_.line, "constraint without right-hand side");
    }
    Row r;
    r.name = row_.name;
    r.sense = row_.sense;
    r.rhs = row_.rhs - row_.constant;
    for (auto& [c, n] : row_.terms) r.terms.emplace_back(c, var_index(n));
    rows_.push_back(std::move(r));
    row_ = PendingRow{};
  }

  void parse_bound(const std::vector<Token>& tokens, int line_no) {
    // Collapse sign tokens into the following number.
    std::vector<Token> t;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind == TokenKind::kSign && i + 1 < tokens.size() &&
          tokens[i + 1].kind == TokenKind::kNumber) {
        Token num = tokens[i + 1];
        if (tokens[i].text == "-") num.number = -num.number;
        t.push_back(num);
        ++i;
      } else {
        t.push_back(tokens[i]);
      }
    }
    auto set_lower = [&](int idx, double v) { lower_[idx] = v; };
    auto set_upper = [&](int idx, double v) { upper_[idx] = v; };
    if (t.size() == 2 && t[0].kind == TokenKind::kName &&
        t[1].kind == TokenKind::kName && lowercase(t[1].text) == "free") {
      const int idx = var_index(t[0].text);
      set_lower(idx, -kInfinity);
      set_upper(idx, kInfinity);
      return;
    }
    if (t.size() == 3 && t[0].kind == TokenKind::kName &&
        t[1].kind == TokenKind::kSense && t[2].kind == TokenKind::kNumber) {
      const int idx = var_index(t[0].text);
      if (t[1].text == "<=") set_upper(idx, t[2].number);
      else if (t[1].text == ">=") set_lower(idx, t[2].number);
      else {
        set_lower(idx, t[2].number);
        set_upper(idx, t[2].number);
      }
      return;
    }
    if (t.size() == 3 && t[0].kind == TokenKind::kNumber &&
        t[1].kind == TokenKind::kSense && t[2].kind == TokenKind::kName) {
      const int idx = var_index(t[2].text);
      if (t[1].text == "<=") set_lower(idx, t[0].number);
      else if (t[1].text == ">=") set_upper(idx, t[0].number);
      else {
        set_lower(idx, t[0].number);
        set_upper(idx, t[0].number);
      }
      return;
    }
    if (t.size() == 5 && t[0].kind == TokenKind::kNumber &&
        t[1].kind == TokenKind::kSense && t[2].kind == TokenKind::kName &&
        t[3].kind == TokenKind::kSense && t[4].kind == TokenKind::kNumber &&
        t[1].text == t[3].text && t[1].text != "=") {
      const int idx = var_index(t[2].text);
      if (t[1].text == "<=") {
        set_lower(idx, t[0].number);
        set_upper(idx, t[4].number);
      } else {
        set_upper(idx, t[0].number);
        set_lower(idx, t[4].number);
      }
      return;
    }
    throw LpParseError(line_no, "unrecognized bound statement");
  }

  int var_index(const std::string& name) {
    auto [it, inserted] =
        index_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) {
      names_.push_back(name);
      lower_.push_back(0.0);
      upper_.push_back(kInfinity);
      domain_.push_back(Domain::kContinuous);
    }
    return it->second;
  }

  Model build() {
    Model model;
    for (std::size_t j = 0; j < names_.size(); ++j) {
      Variable v{names_[j], domain_[j], lower_[j], upper_[j]};
      if (v.domain == Domain::kBinary) {
        // Explicit bounds on binaries narrow [0, 1]; defaults give [0, 1].
        if (v.upper == kInfinity) v.upper = 1.0;
        v.lower = std::max(v.lower, 0.0);
        v.upper = std::min(v.upper, 1.0);
      }
      model.add_variable(std::move(v));
    }
    const double sign = maximize_ ? -1.0 : 1.0;
    for (auto& [c, idx] : objective_) {
      model.add_objective_term(sign * c, VarId{idx});
    }
    std::vector<Term> obj_terms;
    for (std::size_t j = 0; j < model.objective().size(); ++j) {
      if (model.objective()[j] != 0.0) {
        obj_terms.push_back({model.objective()[j], VarId{static_cast<int>(j)}});
      }
    }
    model.set_objective(obj_terms, sign * objective_offset_);
    for (Row& r : rows_) {
      std::vector<Term> terms;
      terms.reserve(r.terms.size());
      for (auto& [c, idx] : r.terms) terms.push_back({c, VarId{idx}});
      model.add_constraint(terms, r.sense, r.rhs, r.name);
    }
    return model;
  }

  struct Row {
    std::string name;
    std::vector<std::pair<double, int>> terms;
    Sense sense = Sense::kLessEqual;
    double rhs = 0.0;
  };

  Section section_ = Section::kNone;
  bool maximize_ = false;
  bool active_ = false;
  PendingRow row_;
  std::vector<std::pair<double, int>> objective_;
  double objective_offset_ = 0.0;
  std::vector<Row> rows_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> names_;
  std::vector<double> lower_, upper_;
  std::vector<Domain> domain_;
};

}  // namespace

Model parse_lp(std::istream& in) { return LpReader().read(in); }

Model parse_lp_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_lp(in);
}

void write_solution(const Model& model, std::span<const double> values,
                    std::ostream& out) {
  char buf[64];
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[j]);
    out << model.variables()[j].name << ' ' << buf << '\n';
  }
}

std::vector<NamedValue> read_solution(std::istream& in) {
  std::vector<NamedValue> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    NamedValue nv;
    if (!(fields >> nv.name)) continue;
    std::string value_text;
    if (!(fields >> value_text)) {
      throw LpParseError(line_no, "missing value for '" + nv.name + "'");
    }
    try {
      nv.value = std::stod(value_text);
    } catch (const std::exception&) {
      throw LpParseError(line_no, "bad value '" + value_text + "'");
    }
    out.push_back(std::move(nv));
  }
  return out;
}

std::vector<double> assignment_from_named(const Model& model,
                                          const std::vector<NamedValue>& named) {
  std::vector<double> values(model.num_variables(), 0.0);
  std::vector<bool> seen(model.num_variables(), false);
  for (const NamedValue& nv : named) {
    auto id = model.find_variable(nv.name);
    if (!id) throw ModelError("unknown variable '" + nv.name + "' in solution");
    values[id->index] = nv.value;
    seen[id->index] = true;
  }
  for (std::size_t j = 0; j < seen.size(); ++j) {
    if (!seen[j]) {
      throw ModelError("solution lacks variable '" +
                       model.variables()[j].name + "'");
    }
  }
  return values;
}

}  // namespace meshreconf::milp
