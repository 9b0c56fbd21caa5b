#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "favor/core.hpp"

namespace favor {

// Attribute predicate tree. Attributes are addressed positionally per type:
// bool0, int1, float2, ... Leaf predicates:
//   BoolEq     bool<i> = true|false
//   IntEq      int<i> = <value>
//   IntIn      int<i> in {v1, v2, ...}        (set kept sorted, deduplicated)
//   FloatRange float<i> in [lo, hi]           (closed on both ends)
// True matches every record. And/Or are n-ary, Not has one child.
struct FilterCondition {
  enum class Kind : uint8_t {
    True,
    BoolEq,
    IntEq,
    IntIn,
    FloatRange,
    And,
    Or,
    Not,
  };

  Kind kind = Kind::True;
  uint32_t attr = 0;
  bool bval = false;
  int64_t ival = 0;
  std::vector<int64_t> iset;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<FilterCondition> kids;

  static FilterCondition always_true();
  static FilterCondition bool_eq(uint32_t attr, bool v);
  static FilterCondition int_eq(uint32_t attr, int64_t v);
  // Throws UsageError on an empty set.
  static FilterCondition int_in(uint32_t attr, std::vector<int64_t> vs);
  // Throws UsageError when lo > hi or either bound is not finite.
  static FilterCondition float_range(uint32_t attr, double lo, double hi);
  // Throws UsageError on an empty child list.
  static FilterCondition all_of(std::vector<FilterCondition> kids);
  static FilterCondition any_of(std::vector<FilterCondition> kids);
  static FilterCondition negate(FilterCondition kid);

  bool operator==(const FilterCondition& other) const;
};

// Evaluates the predicate against record `rec`. Throws UsageError when a
// referenced attribute index is out of range for the table's schema.
bool evaluate(const FilterCondition& f, const AttributeTable& attrs,
              uint64_t rec);

// Throws UsageError when the filter references an attribute the schema does
// not have. Cheap; call once before a query batch.
void validate_filter(const FilterCondition& f, const AttributeSchema& schema);

// Text form, lowest to highest precedence: or, and, not, atoms.
//   expr     := or_expr
//   or_expr  := and_expr ("or" and_expr)*
//   and_expr := not_expr ("and" not_expr)*
//   not_expr := "not" not_expr | atom
//   atom     := "(" expr ")" | "true" | predicate
//   predicate := IDENT "=" (INT | "true" | "false")
//              | IDENT "in" "{" INT ("," INT)* "}"
//              | IDENT "in" "[" NUM "," NUM "]"
//   IDENT    := ("bool" | "int" | "float") DIGITS
// Keywords are case-insensitive. Throws UsageError with the byte offset of
// the problem on malformed input.
FilterCondition parse_filter(const std::string& text);

// Inverse of parse_filter: parse_filter(render_filter(f)) reproduces f
// structurally.
std::string render_filter(const FilterCondition& f);

// Fraction of records matching f. Empty table yields 0.
double exact_selectivity(const FilterCondition& f, const AttributeTable& attrs);

}  // namespace favor
