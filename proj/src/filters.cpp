#include "favor/filters.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace favor {

FilterCondition FilterCondition::always_true() { return {}; }

FilterCondition FilterCondition::bool_eq(uint32_t attr, bool v) {
  FilterCondition f;
  f.kind = Kind::BoolEq;
  f.attr = attr;
  f.bval = v;
  return f;
}

FilterCondition FilterCondition::int_eq(uint32_t attr, int64_t v) {
  FilterCondition f;
  f.kind = Kind::IntEq;
  f.attr = attr;
  f.ival = v;
  return f;
}

FilterCondition FilterCondition::int_in(uint32_t attr,
                                        std::vector<int64_t> vs) {
  if (vs.empty()) throw UsageError("int_in: empty value set");
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  FilterCondition f;
  f.kind = Kind::IntIn;
  f.attr = attr;
  f.iset = std::move(vs);
  return f;
}

FilterCondition FilterCondition::float_range(uint32_t attr, double lo,
                                             double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw UsageError("float_range: bounds must be finite");
  if (lo > hi) throw UsageError("float_range: low exceeds high");
  FilterCondition f;
  f.kind = Kind::FloatRange;
  f.attr = attr;
  f.lo = lo;
  f.hi = hi;
  return f;
}

FilterCondition FilterCondition::all_of(std::vector<FilterCondition> kids) {
  if (kids.empty()) throw UsageError("all_of: empty child list");
  if (kids.size() == 1) return std::move(kids.front());
  FilterCondition f;
  f.kind = Kind::And;
  f.kids = std::move(kids);
  return f;
}

FilterCondition FilterCondition::any_of(std::vector<FilterCondition> kids) {
  if (kids.empty()) throw UsageError("any_of: empty child list");
  if (kids.size() == 1) return std::move(kids.front());
  FilterCondition f;
  f.kind = Kind::Or;
  f.kids = std::move(kids);
  return f;
}

FilterCondition FilterCondition::negate(FilterCondition kid) {
  FilterCondition f;
  f.kind = Kind::Not;
  f.kids.push_back(std::move(kid));
  return f;
}

bool FilterCondition::operator==(const FilterCondition& o) const {
  return kind == o.kind && attr == o.attr && bval == o.bval && ival == o.ival &&
         iset == o.iset && lo == o.lo && hi == o.hi && kids == o.kids;
}

bool evaluate(const FilterCondition& f, const AttributeTable& attrs,
              uint64_t rec) {
  switch (f.kind) {
    case FilterCondition::Kind::True:
      return true;
    case FilterCondition::Kind::BoolEq:
      if (f.attr >= attrs.schema.n_bool)
        throw UsageError("filter references bool" + std::to_string(f.attr) +
                         " but the table has " +
                         std::to_string(attrs.schema.n_bool) +
                         " bool attributes");
      return attrs.bool_at(rec, f.attr) == f.bval;
    case FilterCondition::Kind::IntEq:
      if (f.attr >= attrs.schema.n_int)
        throw UsageError("filter references int" + std::to_string(f.attr) +
                         " but the table has " +
                         std::to_string(attrs.schema.n_int) +
                         " int attributes");
      return attrs.int_at(rec, f.attr) == f.ival;
    case FilterCondition::Kind::IntIn:
      if (f.attr >= attrs.schema.n_int)
        throw UsageError("filter references int" + std::to_string(f.attr) +
                         " but the table has " +
                         std::to_string(attrs.schema.n_int) +
                         " int attributes");
      return std::binary_search(f.iset.begin(), f.iset.end(),
                                int64_t(attrs.int_at(rec, f.attr)));
    case FilterCondition::Kind::FloatRange: {
      if (f.attr >= attrs.schema.n_float)
        throw UsageError("filter references float" + std::to_string(f.attr) +
                         " but the table has " +
                         std::to_string(attrs.schema.n_float) +
                         " float attributes");
      double v = attrs.float_at(rec, f.attr);
      return f.lo <= v && v <= f.hi;
    }
    case FilterCondition::Kind::And:
      for (const auto& kid : f.kids)
        if (!evaluate(kid, attrs, rec)) return false;
      return true;
    case FilterCondition::Kind::Or:
      for (const auto& kid : f.kids)
        if (evaluate(kid, attrs, rec)) return true;
      return false;
    case FilterCondition::Kind::Not:
      return !evaluate(f.kids.front(), attrs, rec);
  }
  throw UsageError("evaluate: unknown filter kind");
}

void validate_filter(const FilterCondition& f, const AttributeSchema& schema) {
  auto check = [&](uint32_t attr, uint32_t arity, const char* family) {
    if (attr >= arity)
      throw UsageError("filter references " + std::string(family) +
                       std::to_string(attr) + " but the schema has " +
                       std::to_string(arity) + " " + family + " attributes");
  };
  switch (f.kind) {
    case FilterCondition::Kind::True:
      break;
    case FilterCondition::Kind::BoolEq:
      check(f.attr, schema.n_bool, "bool");
      break;
    case FilterCondition::Kind::IntEq:
    case FilterCondition::Kind::IntIn:
      check(f.attr, schema.n_int, "int");
      break;
    case FilterCondition::Kind::FloatRange:
      check(f.attr, schema.n_float, "float");
      break;
    case FilterCondition::Kind::And:
    case FilterCondition::Kind::Or:
    case FilterCondition::Kind::Not:
      for (const auto& kid : f.kids) validate_filter(kid, schema);
      break;
  }
}

double exact_selectivity(const FilterCondition& f,
                         const AttributeTable& attrs) {
  if (attrs.count == 0) return 0.0;
  uint64_t hits = 0;
  for (uint64_t i = 0; i < attrs.count; ++i)
    if (evaluate(f, attrs, i)) ++hits;
  return double(hits) / double(attrs.count);
}

// ---------------------------------------------------------------------------
// parsing

namespace {

struct Token {
  enum class Type { word, number, punct, end };
  Type type = Type::end;
  std::string text;   // words lowercased
  size_t offset = 0;
  bool is_integer = false;
  int64_t int_value = 0;
  double num_value = 0.0;
};

[[noreturn]] void fail_at(size_t offset, const std::string& msg) {
  throw UsageError("filter syntax error at offset " + std::to_string(offset) +
                   ": " + msg);
}

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < s.size() &&
             std::isalnum(static_cast<unsigned char>(s[j])))
        ++j;
      t.type = Token::Type::word;
      t.text = s.substr(i, j - i);
      for (auto& ch : t.text)
        ch = char(std::tolower(static_cast<unsigned char>(ch)));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
               c == '+' || c == '.') {
      size_t j = i;
      if (s[j] == '-' || s[j] == '+') ++j;
      bool saw_digit = false, saw_dot = false, saw_exp = false;
      while (j < s.size()) {
        char d = s[j];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          saw_digit = true;
          ++j;
        } else if (d == '.' && !saw_dot && !saw_exp) {
          saw_dot = true;
          ++j;
        } else if ((d == 'e' || d == 'E') && saw_digit && !saw_exp) {
          saw_exp = true;
          ++j;
          if (j < s.size() && (s[j] == '-' || s[j] == '+')) ++j;
        } else {
          break;
        }
      }
      if (!saw_digit) fail_at(i, "malformed number");
      t.type = Token::Type::number;
      t.text = s.substr(i, j - i);
      t.is_integer = !saw_dot && !saw_exp;
      if (t.is_integer) {
        const char* first = t.text.data() + (t.text[0] == '+' ? 1 : 0);
        auto res = std::from_chars(first, t.text.data() + t.text.size(),
                                   t.int_value);
        if (res.ec != std::errc{}) fail_at(i, "integer out of range");
      }
      t.num_value = std::strtod(t.text.c_str(), nullptr);
      if (!std::isfinite(t.num_value)) fail_at(i, "number out of range");
      i = j;
    } else if (std::string("(){}[]=,").find(c) != std::string::npos) {
      t.type = Token::Type::punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      fail_at(i, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.offset = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(tokenize(text)) {}

  FilterCondition parse() {
    FilterCondition f = or_expr();
    if (cur().type != Token::Type::end)
      fail_at(cur().offset, "unexpected trailing input");
    return f;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  void advance() { ++pos_; }

  bool at_word(const char* w) const {
    return cur().type == Token::Type::word && cur().text == w;
  }
  bool at_punct(char c) const {
    return cur().type == Token::Type::punct && cur().text[0] == c;
  }
  void expect_punct(char c, const char* what) {
    if (!at_punct(c)) fail_at(cur().offset, std::string("expected ") + what);
    advance();
  }

  FilterCondition or_expr() {
    std::vector<FilterCondition> kids;
    kids.push_back(and_expr());
    while (at_word("or")) {
      advance();
      kids.push_back(and_expr());
    }
    return FilterCondition::any_of(std::move(kids));
  }

  FilterCondition and_expr() {
    std::vector<FilterCondition> kids;
    kids.push_back(not_expr());
    while (at_word("and")) {
      advance();
      kids.push_back(not_expr());
    }
    return FilterCondition::all_of(std::move(kids));
  }

  FilterCondition not_expr() {
    if (at_word("not")) {
      advance();
      return FilterCondition::negate(not_expr());
    }
    return atom();
  }

  FilterCondition atom() {
    if (at_punct('(')) {
      advance();
      FilterCondition f = or_expr();
      expect_punct(')', "')'");
      return f;
    }
    if (at_word("true")) {
      advance();
      return FilterCondition::always_true();
    }
    if (cur().type != Token::Type::word)
      fail_at(cur().offset, "expected a predicate");
    return predicate();
  }

  enum class Family { b, i, f };

  FilterCondition predicate() {
    size_t off = cur().offset;
    std::string name = cur().text;
    Family fam;
    uint32_t attr = 0;
    if (!split_ident(name, fam, attr))
      throw UsageError("unknown attribute name '" + name + "' at offset " +
                       std::to_string(off) +
                       " (expected bool<N>, int<N>, or float<N>)");
    advance();

    if (at_punct('=')) {
      advance();
      switch (fam) {
        case Family::b: {
          if (at_word("true") || at_word("false")) {
            bool v = cur().text == "true";
            advance();
            return FilterCondition::bool_eq(attr, v);
          }
          fail_at(cur().offset, "bool attributes compare to true or false");
        }
        case Family::i: {
          if (cur().type != Token::Type::number || !cur().is_integer)
            fail_at(cur().offset, "expected an integer value");
          int64_t v = cur().int_value;
          advance();
          return FilterCondition::int_eq(attr, v);
        }
        case Family::f:
          fail_at(cur().offset,
                  "float attributes use range syntax: float" +
                      std::to_string(attr) + " in [low, high]");
      }
    }
    if (at_word("in")) {
      advance();
      if (fam == Family::i) {
        expect_punct('{', "'{'");
        std::vector<int64_t> vs;
        while (true) {
          if (cur().type != Token::Type::number || !cur().is_integer)
            fail_at(cur().offset, "expected an integer set member");
          vs.push_back(cur().int_value);
          advance();
          if (at_punct(',')) {
            advance();
            continue;
          }
          break;
        }
        expect_punct('}', "'}'");
        return FilterCondition::int_in(attr, std::move(vs));
      }
      if (fam == Family::f) {
        expect_punct('[', "'['");
        if (cur().type != Token::Type::number)
          fail_at(cur().offset, "expected a number");
        double lo = cur().num_value;
        size_t lo_off = cur().offset;
        advance();
        expect_punct(',', "','");
        if (cur().type != Token::Type::number)
          fail_at(cur().offset, "expected a number");
        double hi = cur().num_value;
        advance();
        expect_punct(']', "']'");
        if (lo > hi) fail_at(lo_off, "malformed range: low exceeds high");
        return FilterCondition::float_range(attr, lo, hi);
      }
      fail_at(cur().offset, "bool attributes do not support 'in'");
    }
    fail_at(cur().offset, "expected '=' or 'in' after attribute name");
  }

  static bool split_ident(const std::string& name, Family& fam,
                          uint32_t& attr) {
    static const std::pair<const char*, Family> families[] = {
        {"bool", Family::b}, {"int", Family::i}, {"float", Family::f}};
    for (auto [prefix, f] : families) {
      size_t n = std::string(prefix).size();
      if (name.size() > n && name.compare(0, n, prefix) == 0) {
        uint32_t idx = 0;
        auto res = std::from_chars(name.data() + n, name.data() + name.size(),
                                   idx);
        if (res.ec == std::errc{} && res.ptr == name.data() + name.size()) {
          fam = f;
          attr = idx;
          return true;
        }
      }
    }
    return false;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool needs_parens_under_and(const FilterCondition& f) {
  return f.kind == FilterCondition::Kind::And ||
         f.kind == FilterCondition::Kind::Or;
}

void render_into(const FilterCondition& f, std::string& out) {
  using Kind = FilterCondition::Kind;
  auto wrapped = [&](const FilterCondition& kid, bool wrap) {
    if (wrap) out += '(';
    render_into(kid, out);
    if (wrap) out += ')';
  };
  switch (f.kind) {
    case Kind::True:
      out += "true";
      break;
    case Kind::BoolEq:
      out += "bool" + std::to_string(f.attr) + " = " +
             (f.bval ? "true" : "false");
      break;
    case Kind::IntEq:
      out += "int" + std::to_string(f.attr) + " = " + std::to_string(f.ival);
      break;
    case Kind::IntIn: {
      out += "int" + std::to_string(f.attr) + " in {";
      for (size_t i = 0; i < f.iset.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(f.iset[i]);
      }
      out += '}';
      break;
    }
    case Kind::FloatRange:
      out += "float" + std::to_string(f.attr) + " in [" +
             format_double(f.lo) + ", " + format_double(f.hi) + "]";
      break;
    case Kind::And:
      for (size_t i = 0; i < f.kids.size(); ++i) {
        if (i > 0) out += " and ";
        wrapped(f.kids[i], needs_parens_under_and(f.kids[i]));
      }
      break;
    case Kind::Or:
      for (size_t i = 0; i < f.kids.size(); ++i) {
        if (i > 0) out += " or ";
        wrapped(f.kids[i], f.kids[i].kind == Kind::Or);
      }
      break;
    case Kind::Not:
      out += "not ";
      wrapped(f.kids.front(), needs_parens_under_and(f.kids.front()));
      break;
  }
}

}  // namespace

FilterCondition parse_filter(const std::string& text) {
  return Parser(text).parse();
}

std::string render_filter(const FilterCondition& f) {
  std::string out;
  render_into(f, out);
  return out;
}

}  // namespace favor
