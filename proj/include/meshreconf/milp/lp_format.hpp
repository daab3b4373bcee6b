#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "meshreconf/milp/model.hpp"

namespace meshreconf::milp {

class LpParseError : public std::runtime_error {
 public:
  LpParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Maps a model name onto the LP-format identifier alphabet: characters outside
// [A-Za-z0-9_.] become '_', and names that would start with a digit, a period
// or an exponent-like 'e' get a leading '_'.
std::string sanitize_lp_name(std::string_view name);

// Writes the model in the CPLEX-style LP text dialect (Minimize / Subject To /
// Bounds / Generals / Binaries / End). Numbers carry 12 significant digits.
// Sanitized names are made unique by appending "_<n>" where needed.
void write_lp(const Model& model, std::ostream& out);
std::string write_lp(const Model& model);

// Reads the dialect produced by write_lp, plus the common variants of it
// (maximize, "s.t.", "=<", free/infinity bounds, '\' comments). A maximize
// objective is negated so the returned model is always a minimization.
Model parse_lp(std::istream& in);
Model parse_lp_string(std::string_view text);

// Solution text: one "name value" pair per line, '#' starts a comment.
struct NamedValue {
  std::string name;
  double value = 0.0;
};

void write_solution(const Model& model, std::span<const double> values,
                    std::ostream& out);
std::vector<NamedValue> read_solution(std::istream& in);

// Resolves named values onto the model's variable order. Throws ModelError if
// a model variable is missing or a name is unknown.
std::vector<double> assignment_from_named(const Model& model,
                                          const std::vector<NamedValue>& named);

}  // namespace meshreconf::milp
