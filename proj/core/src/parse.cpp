#include "invwb/parse.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "invwb/print.hpp"

namespace invwb {

namespace {

enum class Tok {
  End, Newline, Ident, Int, Real,
  LParen, RParen, LBracket, RBracket,
  Comma, Colon, Semicolon, Assign, DotDot, Dot,
  Plus, Minus, Star, Slash, SlashSlash, Caret,
  Eq, Ne, Lt, Le, Gt, Ge,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    // skip spaces and comments, collapsing comment-only lines into newlines
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_; ++col_;
      } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    SourcePos p{line_, col_};
    if (pos_ >= text_.size()) { tok_ = {Tok::End, "", p}; return; }
    char c = text_[pos_];
    if (c == '\n') {
      ++pos_; ++line_; col_ = 1;
      tok_ = {Tok::Newline, "\\n", p};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
      bool real = false;
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
        real = true;
        bump();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t save = pos_;
        bump();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) bump();
        if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          real = true;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
        } else {
          pos_ = save; // not an exponent (identifier like `e` follows)
        }
      }
      tok_ = {real ? Tok::Real : Tok::Int, text_.substr(start, pos_ - start), p};
      return;
    }
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) bump();
      tok_ = {Tok::Ident, text_.substr(start, pos_ - start), p};
      return;
    }
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b;
    };
    if (two(':', '=')) { pos_ += 2; col_ += 2; tok_ = {Tok::Assign, ":=", p}; return; }
    if (two('/', '=')) { pos_ += 2; col_ += 2; tok_ = {Tok::Ne, "/=", p}; return; }
    if (two('/', '/')) { pos_ += 2; col_ += 2; tok_ = {Tok::SlashSlash, "//", p}; return; }
    if (two('<', '=')) { pos_ += 2; col_ += 2; tok_ = {Tok::Le, "<=", p}; return; }
    if (two('>', '=')) { pos_ += 2; col_ += 2; tok_ = {Tok::Ge, ">=", p}; return; }
    if (two('.', '.')) { pos_ += 2; col_ += 2; tok_ = {Tok::DotDot, "..", p}; return; }
    Tok k;
    switch (c) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case ';': k = Tok::Semicolon; break;
      case '.': k = Tok::Dot; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      case '=': k = Tok::Eq; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", p);
    }
    bump();
    tok_ = {k, std::string(1, c), p};
  }

  void bump() { ++pos_; ++col_; }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

const std::set<std::string> kKeywords = {
    "from", "invariant", "until", "variant", "loop", "end", "require", "ensure",
    "local", "do", "if", "then", "else", "elseif", "across", "as", "not", "and",
    "or", "implies", "iff", "old", "forall", "exists", "in", "mod", "catOp",
    "true", "false", "True", "False", "Void", "new"};

bool is_cmp(BinOp op) {
  switch (op) {
    case BinOp::Eq: case BinOp::Ne: case BinOp::Lt: case BinOp::Le:
    case BinOp::Gt: case BinOp::Ge:
      return true;
    default:
      return false;
  }
}

class Parser {
 public:
  Parser(const std::string& text, std::string filename)
      : lex_(text), filename_(std::move(filename)) {}

  ExprPtr parse_single_expr() {
    skip_newlines();
    ExprPtr e = expr();
    skip_newlines();
    expect_end();
    return e;
  }

  std::vector<Routine> parse_file() {
    std::vector<Routine> out;
    skip_newlines();
    while (!at_end()) {
      out.push_back(routine());
      skip_newlines();
    }
    if (out.empty()) fail("no routines found");
    return out;
  }

 private:
  // ---- token helpers ----
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(filename_ + ": " + msg, lex_.peek().pos);
  }
  bool at_end() { return lex_.peek().kind == Tok::End; }
  bool peek_is(Tok k) { return lex_.peek().kind == k; }
  bool peek_ident(const std::string& s) {
    return lex_.peek().kind == Tok::Ident && lex_.peek().text == s;
  }
  Token eat() { return lex_.next(); }
  Token expect(Tok k, const std::string& what) {
    if (!peek_is(k)) fail("expected " + what + ", got '" + lex_.peek().text + "'");
    return eat();
  }
  void expect_kw(const std::string& kw) {
    if (!peek_ident(kw)) fail("expected '" + kw + "', got '" + lex_.peek().text + "'");
    eat();
  }
  bool accept_kw(const std::string& kw) {
    if (peek_ident(kw)) { eat(); return true; }
    return false;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected trailing input '" + lex_.peek().text + "'");
  }
  void skip_newlines() {
    while (peek_is(Tok::Newline) || peek_is(Tok::Semicolon)) eat();
  }
  void skip_separator() { // at least statements/clauses are newline- or ';'-separated
    if (peek_is(Tok::Newline) || peek_is(Tok::Semicolon)) { skip_newlines(); }
  }

  // ---- expressions ----

  // Precedence climbing. Comparison chains (a <= b < c) desugar to
  // conjunctions; slice comparisons desugar to bounded quantifications;
  // `x in [lo..hi]` desugars to its two bounds.
  ExprPtr expr() { return parse_iff(); }

  ExprPtr parse_iff() {
    ExprPtr l = parse_implies();
    while (peek_ident("iff")) {
      eat();
      l = mk::binary(BinOp::Iff, l, parse_implies());
    }
    return l;
  }
  ExprPtr parse_implies() {
    ExprPtr l = parse_or();
    if (peek_ident("implies")) {
      eat();
      return mk::binary(BinOp::Implies, l, parse_implies()); // right-assoc
    }
    return l;
  }
  ExprPtr parse_or() {
    ExprPtr l = parse_and();
    while (peek_ident("or")) {
      eat();
      l = mk::binary(BinOp::Or, l, parse_and());
    }
    return l;
  }
  ExprPtr parse_and() {
    ExprPtr l = parse_not();
    while (peek_ident("and")) {
      eat();
      l = mk::binary(BinOp::And, l, parse_not());
    }
    return l;
  }
  ExprPtr parse_not() {
    if (peek_ident("not")) {
      eat();
      return mk::unary(UnOp::Not, parse_not());
    }
    return parse_comparison();
  }

  std::optional<BinOp> peek_cmp_op() {
    switch (lex_.peek().kind) {
      case Tok::Eq: return BinOp::Eq;
      case Tok::Ne: return BinOp::Ne;
      case Tok::Lt: return BinOp::Lt;
      case Tok::Le: return BinOp::Le;
      case Tok::Gt: return BinOp::Gt;
      case Tok::Ge: return BinOp::Ge;
      case Tok::Ident:
        if (lex_.peek().text == "in") return BinOp::In;
        return std::nullopt;
      default: return std::nullopt;
    }
  }

  ExprPtr parse_comparison() {
    ExprPtr first = parse_cat();
    auto op = peek_cmp_op();
    if (!op) return first;

    std::vector<ExprPtr> operands{first};
    std::vector<BinOp> ops;
    while (op) {
      eat();
      if (*op == BinOp::In) {
        ExprPtr memb = parse_in_rhs(operands.back());
        if (operands.size() == 1 && ops.empty()) {
          operands.back() = memb;
          // membership is not chainable
          if (peek_cmp_op()) fail("comparison chain after 'in' is not allowed");
          return memb;
        }
        fail("'in' cannot appear inside a comparison chain");
      }
      operands.push_back(parse_cat());
      ops.push_back(*op);
      op = peek_cmp_op();
    }
    // Build the conjunction of adjacent comparisons.
    ExprPtr result;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      ExprPtr atom = make_comparison(ops[i], operands[i], operands[i + 1]);
      result = result ? mk::binary(BinOp::And, result, atom) : atom;
    }
    return result;
  }

  // x in [lo..hi] => lo <= x and x <= hi; otherwise a membership test.
  ExprPtr parse_in_rhs(const ExprPtr& lhs) {
    if (peek_is(Tok::LBracket)) {
      eat();
      ExprPtr lo = expr();
      expect(Tok::DotDot, "'..'");
      ExprPtr hi = expr();
      expect(Tok::RBracket, "']'");
      return mk::binary(BinOp::And, make_comparison(BinOp::Le, lo, lhs),
                        make_comparison(BinOp::Le, lhs, hi));
    }
    ExprPtr rhs = parse_cat();
    return mk::binary(BinOp::In, lhs, rhs);
  }

  // Slice operands of an order comparison are shorthand for a quantification
  // over the slice's range; the empty slice case is vacuously true.
  ExprPtr make_comparison(BinOp op, const ExprPtr& l, const ExprPtr& r) {
    const bool order = op == BinOp::Lt || op == BinOp::Le || op == BinOp::Gt || op == BinOp::Ge;
    const auto* ls = std::get_if<SliceExpr>(&l->node);
    const auto* rs = std::get_if<SliceExpr>(&r->node);
    if (!order || (!ls && !rs)) return mk::binary(op, l, r);

    std::set<std::string> used;
    for (const auto& v : free_vars(*l)) used.insert(v);
    for (const auto& v : free_vars(*r)) used.insert(v);
    auto fresh = [&used]() {
      std::string base = "k";
      if (!used.count(base)) { used.insert(base); return base; }
      for (int i = 1;; ++i) {
        std::string name = "k" + std::to_string(i);
        if (!used.count(name)) { used.insert(name); return name; }
      }
    };

    ExprPtr lhs = l, rhs = r;
    std::vector<std::tuple<std::string, ExprPtr, ExprPtr>> binders;
    if (ls) {
      std::string k = fresh();
      binders.emplace_back(k, ls->lo, ls->hi);
      lhs = mk::index(ls->array, mk::var(k));
    }
    if (rs) {
      std::string k = fresh();
      binders.emplace_back(k, rs->lo, rs->hi);
      rhs = mk::index(rs->array, mk::var(k));
    }
    ExprPtr body = mk::binary(op, lhs, rhs);
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      body = mk::quant(QuantKind::Forall, std::get<0>(*it), std::get<1>(*it),
                       std::get<2>(*it), body);
    }
    return body;
  }

  ExprPtr parse_cat() {
    ExprPtr l = parse_add();
    while (peek_ident("catOp")) {
      eat();
      l = mk::fun("cat", {l, parse_add()});
    }
    return l;
  }
  ExprPtr parse_add() {
    ExprPtr l = parse_mul();
    while (peek_is(Tok::Plus) || peek_is(Tok::Minus)) {
      BinOp op = peek_is(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      eat();
      l = mk::binary(op, l, parse_mul());
    }
    return l;
  }
  ExprPtr parse_mul() {
    ExprPtr l = parse_unary();
    while (true) {
      BinOp op;
      if (peek_is(Tok::Star)) op = BinOp::Mul;
      else if (peek_is(Tok::Slash)) op = BinOp::RealDiv;
      else if (peek_is(Tok::SlashSlash)) op = BinOp::IntDiv;
      else if (peek_ident("mod")) op = BinOp::Mod;
      else break;
      eat();
      l = mk::binary(op, l, parse_unary());
    }
    return l;
  }
  ExprPtr parse_unary() {
    if (peek_is(Tok::Minus)) {
      eat();
      return mk::unary(UnOp::Neg, parse_unary());
    }
    if (peek_ident("old")) {
      eat();
      return mk::old(parse_unary());
    }
    return parse_pow();
  }
  ExprPtr parse_pow() {
    ExprPtr l = parse_postfix();
    if (peek_is(Tok::Caret)) {
      eat();
      // right-assoc; exponent may itself be unary/pow
      return mk::binary(BinOp::Pow, l, parse_unary());
    }
    return l;
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (true) {
      if (peek_is(Tok::LBracket)) {
        eat();
        ExprPtr first = expr();
        if (peek_is(Tok::DotDot)) {
          eat();
          ExprPtr hi = expr();
          expect(Tok::RBracket, "']'");
          e = mk::slice(e, first, hi);
        } else {
          e = mk::index(e, first);
          while (peek_is(Tok::Comma)) {
            eat();
            e = mk::index(e, expr());
          }
          expect(Tok::RBracket, "']'");
        }
      } else if (peek_is(Tok::Dot)) {
        eat();
        Token name = expect(Tok::Ident, "field name");
        e = mk::field(e, name.text);
      } else {
        break;
      }
    }
    return e;
  }

  ExprPtr parse_primary() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Int: {
        Token tok = eat();
        return mk::int_lit(BigInt(tok.text));
      }
      case Tok::Real: {
        Token tok = eat();
        return mk::real_lit(std::stod(tok.text));
      }
      case Tok::LParen: {
        eat();
        ExprPtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        if (t.text == "true" || t.text == "True") { eat(); return mk::bool_lit(true); }
        if (t.text == "false" || t.text == "False") { eat(); return mk::bool_lit(false); }
        if (t.text == "Void") { eat(); return mk::void_lit(); }
        if (t.text == "forall" || t.text == "exists") return parse_quant();
        if (t.text == "min" || t.text == "max") return parse_minmax();
        if (kKeywords.count(t.text)) fail("unexpected keyword '" + t.text + "'");
        Token name = eat();
        if (peek_is(Tok::LParen)) {
          return mk::fun(name.text, parse_args());
        }
        return mk::var(name.text);
      }
      default:
        fail("expected expression, got '" + t.text + "'");
    }
  }

  std::vector<ExprPtr> parse_args() {
    expect(Tok::LParen, "'('");
    std::vector<ExprPtr> args;
    if (!peek_is(Tok::RParen)) {
      args.push_back(expr());
      while (peek_is(Tok::Comma)) {
        eat();
        args.push_back(expr());
      }
    }
    expect(Tok::RParen, "')'");
    return args;
  }

  // min/max: two or more args build the binary node (left-nested);
  // a single argument is the sequence minimum/maximum (registry symbol).
  ExprPtr parse_minmax() {
    Token t = eat();
    MinMaxOp op = t.text == "min" ? MinMaxOp::Min : MinMaxOp::Max;
    std::vector<ExprPtr> args = parse_args();
    if (args.empty()) fail(t.text + " needs at least one argument");
    if (args.size() == 1) return mk::fun(t.text, std::move(args));
    ExprPtr e = args[0];
    for (std::size_t i = 1; i < args.size(); ++i) e = mk::minmax(op, e, args[i]);
    return e;
  }

  ExprPtr parse_quant() {
    Token t = eat();
    QuantKind kind = t.text == "forall" ? QuantKind::Forall : QuantKind::Exists;
    Token var = expect(Tok::Ident, "bound variable");
    if (kKeywords.count(var.text)) fail("quantifier variable cannot be keyword '" + var.text + "'");
    expect_kw("in");
    expect(Tok::LBracket, "'['");
    ExprPtr lo = expr();
    expect(Tok::DotDot, "'..'");
    ExprPtr hi = expr();
    expect(Tok::RBracket, "']'");
    expect(Tok::Colon, "':'");
    ExprPtr body = expr();
    return mk::quant(kind, var.text, lo, hi, body);
  }

  // ---- routines ----

  SemType parse_type() {
    Token t = expect(Tok::Ident, "type name");
    auto bracketed = [&]() -> std::string {
      if (!peek_is(Tok::LBracket)) return "";
      eat();
      Token inner = expect(Tok::Ident, "element type");
      std::string res = inner.text;
      if (peek_is(Tok::LBracket)) { // ARRAY [SET [INTEGER]]
        eat();
        expect(Tok::Ident, "element type");
        expect(Tok::RBracket, "']'");
        res += "[]";
      }
      expect(Tok::RBracket, "']'");
      return res;
    };
    if (t.text == "INTEGER") return SemType::Int;
    if (t.text == "REAL") return SemType::Real;
    if (t.text == "BOOLEAN") return SemType::Bool;
    if (t.text == "LIST") { bracketed(); return SemType::ListRef; }
    if (t.text == "NODE") return SemType::NodeRef;
    if (t.text == "MATRIX") return SemType::Matrix;
    if (t.text == "SET") { bracketed(); return SemType::IntArray; }
    if (t.text == "ARRAY") {
      std::string inner = bracketed();
      if (inner == "REAL") return SemType::RealArray;
      if (inner == "SET[]" || inner == "SET") return SemType::SetArray;
      return SemType::IntArray;
    }
    fail("unknown type '" + t.text + "'");
  }

  std::vector<VarDecl> parse_decl_group() {
    std::vector<std::string> names;
    names.push_back(expect(Tok::Ident, "name").text);
    while (peek_is(Tok::Comma)) {
      eat();
      names.push_back(expect(Tok::Ident, "name").text);
    }
    expect(Tok::Colon, "':'");
    SemType ty = parse_type();
    std::vector<VarDecl> out;
    for (auto& n : names) out.push_back({n, ty});
    return out;
  }

  std::vector<VarDecl> parse_decl_groups(Tok terminator) {
    std::vector<VarDecl> out;
    skip_newlines();
    if (peek_is(terminator)) return out;
    while (true) {
      auto group = parse_decl_group();
      out.insert(out.end(), group.begin(), group.end());
      skip_newlines();
      if (peek_is(Tok::Semicolon)) { eat(); skip_newlines(); continue; }
      if (peek_is(terminator)) break;
      if (peek_is(Tok::Ident) && !kKeywords.count(lex_.peek().text)) continue;
      break;
    }
    return out;
  }

  std::vector<AnnotatedClause> parse_clauses(const std::set<std::string>& stops) {
    std::vector<AnnotatedClause> out;
    skip_newlines();
    while (!at_end() && !(peek_is(Tok::Ident) && stops.count(lex_.peek().text))) {
      AnnotatedClause c;
      if (peek_is(Tok::Ident) &&
          (lex_.peek().text == "essential" || lex_.peek().text == "bounding")) {
        // clause tag looks like `essential: expr`
        Token tag = eat();
        if (peek_is(Tok::Colon)) {
          eat();
          c.tag = tag.text == "essential" ? ClauseTag::Essential : ClauseTag::Bounding;
        } else {
          fail("expected ':' after clause tag '" + tag.text + "'");
        }
      }
      c.expr = expr();
      out.push_back(std::move(c));
      skip_newlines();
    }
    return out;
  }

  // statement-list terminators
  static const std::set<std::string>& stmt_stops() {
    static const std::set<std::string> s = {"end", "else", "elseif", "ensure",
                                            "invariant", "until", "variant", "loop"};
    return s;
  }

  std::vector<StmtPtr> parse_stmts(const std::set<std::string>& stops) {
    std::vector<StmtPtr> out;
    skip_newlines();
    while (!at_end() && !(peek_is(Tok::Ident) && stops.count(lex_.peek().text))) {
      out.push_back(parse_stmt());
      skip_newlines();
    }
    return out;
  }

  StmtPtr make_stmt(StmtNode node, SourcePos pos) {
    return std::make_shared<Stmt>(Stmt{std::move(node), pos});
  }

  StmtPtr parse_stmt() {
    SourcePos pos = lex_.peek().pos;
    if (peek_ident("if")) return parse_if();
    if (peek_ident("from")) return parse_loop();
    if (peek_ident("across")) return parse_across();

    // assignment, swap, or new
    Token name = expect(Tok::Ident, "statement");
    if (kKeywords.count(name.text)) fail("unexpected keyword '" + name.text + "'");
    LValue lv;
    lv.var = name.text;
    while (peek_is(Tok::LBracket)) {
      eat();
      lv.indices.push_back(expr());
      while (peek_is(Tok::Comma)) {
        eat();
        lv.indices.push_back(expr());
      }
      expect(Tok::RBracket, "']'");
    }
    if (peek_is(Tok::Dot)) {
      eat();
      Token f = expect(Tok::Ident, "field or swap");
      if (f.text == "swap") {
        if (!lv.indices.empty()) fail("swap applies to a whole array variable");
        expect(Tok::LParen, "'('");
        ExprPtr i = expr();
        expect(Tok::Comma, "','");
        ExprPtr j = expr();
        expect(Tok::RParen, "')'");
        return make_stmt(SwapStmt{lv.var, i, j}, pos);
      }
      lv.field = f.text;
    }
    expect(Tok::Assign, "':='");
    if (peek_ident("new")) {
      eat();
      if (!lv.indices.empty() || !lv.field.empty()) fail("new assigns to a plain variable");
      expect(Tok::LParen, "'('");
      ExprPtr v = expr();
      expect(Tok::RParen, "')'");
      return make_stmt(NewStmt{lv.var, v}, pos);
    }
    ExprPtr value = expr();
    if (contains_old(*value)) fail("`old` may only appear in assertions, not in executable code");
    for (const auto& ix : lv.indices)
      if (contains_old(*ix)) fail("`old` may only appear in assertions, not in executable code");
    return make_stmt(AssignStmt{std::move(lv), value}, pos);
  }

  StmtPtr parse_if() {
    SourcePos pos = lex_.peek().pos;
    expect_kw("if");
    ExprPtr cond = expr();
    if (contains_old(*cond)) fail("`old` may only appear in assertions");
    expect_kw("then");
    auto then_branch = parse_stmts(stmt_stops());
    std::vector<StmtPtr> else_branch;
    if (peek_ident("elseif")) {
      // parse `elseif c then ... [else ...] end` as a nested if sharing the end
      StmtPtr nested = parse_elseif_chain(pos);
      else_branch.push_back(nested);
      return make_stmt(IfStmt{cond, std::move(then_branch), std::move(else_branch)}, pos);
    }
    if (accept_kw("else")) {
      else_branch = parse_stmts(stmt_stops());
    }
    expect_kw("end");
    return make_stmt(IfStmt{cond, std::move(then_branch), std::move(else_branch)}, pos);
  }

  StmtPtr parse_elseif_chain(SourcePos pos) {
    expect_kw("elseif");
    ExprPtr cond = expr();
    expect_kw("then");
    auto then_branch = parse_stmts(stmt_stops());
    std::vector<StmtPtr> else_branch;
    if (peek_ident("elseif")) {
      else_branch.push_back(parse_elseif_chain(pos));
      return make_stmt(IfStmt{cond, std::move(then_branch), std::move(else_branch)}, pos);
    }
    if (accept_kw("else")) else_branch = parse_stmts(stmt_stops());
    expect_kw("end");
    return make_stmt(IfStmt{cond, std::move(then_branch), std::move(else_branch)}, pos);
  }

  // from Init invariant Inv until Exit [variant V] loop Body [variant V] end
  StmtPtr parse_loop() {
    SourcePos pos = lex_.peek().pos;
    expect_kw("from");
    auto init = parse_stmts(stmt_stops());
    std::vector<AnnotatedClause> inv;
    if (accept_kw("invariant")) {
      inv = parse_clauses({"until", "variant", "loop"});
    }
    expect_kw("until");
    ExprPtr exit = expr();
    skip_newlines();
    ExprPtr variant;
    if (accept_kw("variant")) {
      variant = expr();
      skip_newlines();
    }
    expect_kw("loop");
    auto body = parse_stmts(stmt_stops());
    if (accept_kw("variant")) {
      if (variant) fail("duplicate variant clause");
      variant = expr();
      skip_newlines();
    }
    expect_kw("end");
    LoopStmt loop;
    loop.loop_id = next_loop_id_++;
    loop.pos = pos;
    loop.init = std::move(init);
    loop.invariant = std::move(inv);
    loop.exit = exit;
    loop.variant = variant;
    loop.body = std::move(body);
    return make_stmt(std::move(loop), pos);
  }

  // across [lo..hi] as k [invariant Inv] loop Body [variant V] end
  // is shorthand for
  //   from k := lo invariant Inv until k = hi + 1 loop Body; k := k + 1 end
  // with variant hi + 1 - k supplied when none is written.
  StmtPtr parse_across() {
    SourcePos pos = lex_.peek().pos;
    expect_kw("across");
    expect(Tok::LBracket, "'['");
    ExprPtr lo = expr();
    expect(Tok::DotDot, "'..'");
    ExprPtr hi = expr();
    expect(Tok::RBracket, "']'");
    expect_kw("as");
    Token iter = expect(Tok::Ident, "iterator name");
    skip_newlines();
    std::vector<AnnotatedClause> inv;
    if (accept_kw("invariant")) {
      inv = parse_clauses({"loop", "variant"});
    }
    ExprPtr variant;
    expect_kw("loop");
    auto body = parse_stmts(stmt_stops());
    if (accept_kw("variant")) {
      variant = expr();
      skip_newlines();
    }
    expect_kw("end");

    ExprPtr itv = mk::var(iter.text);
    ExprPtr hi1 = mk::binary(BinOp::Add, hi, mk::int_lit(1));
    LoopStmt loop;
    loop.loop_id = next_loop_id_++;
    loop.pos = pos;
    loop.init.push_back(make_stmt(AssignStmt{LValue{iter.text, {}, ""}, lo}, pos));
    loop.invariant = std::move(inv);
    loop.exit = mk::binary(BinOp::Eq, itv, hi1);
    loop.variant = variant ? variant : mk::binary(BinOp::Sub, hi1, itv);
    loop.body = std::move(body);
    loop.body.push_back(make_stmt(
        AssignStmt{LValue{iter.text, {}, ""}, mk::binary(BinOp::Add, itv, mk::int_lit(1))},
        pos));
    loop.from_across = true;
    loop.across_iterator = iter.text;
    across_iterators_.push_back({iter.text, SemType::Int});
    return make_stmt(std::move(loop), pos);
  }

  Routine routine() {
    next_loop_id_ = 0;
    across_iterators_.clear();

    Routine r;
    Token name = expect(Tok::Ident, "routine name");
    if (kKeywords.count(name.text)) fail("routine name cannot be a keyword");
    r.name = name.text;
    expect(Tok::LParen, "'('");
    if (!peek_is(Tok::RParen)) {
      while (true) {
        auto group = parse_decl_group();
        r.params.insert(r.params.end(), group.begin(), group.end());
        if (peek_is(Tok::Semicolon)) { eat(); continue; }
        break;
      }
    }
    expect(Tok::RParen, "')'");
    if (peek_is(Tok::Colon)) {
      eat();
      if (peek_is(Tok::LParen)) { // named outputs: (q, r: INTEGER)
        eat();
        while (true) {
          auto group = parse_decl_group();
          r.outputs.insert(r.outputs.end(), group.begin(), group.end());
          if (peek_is(Tok::Semicolon)) { eat(); continue; }
          break;
        }
        expect(Tok::RParen, "')'");
      } else {
        SemType ty = parse_type();
        r.outputs.push_back({"Result", ty});
      }
    }
    skip_newlines();
    expect_kw("require");
    r.precondition = parse_clauses({"local", "do"});
    if (accept_kw("local")) {
      r.locals = parse_decl_groups(Tok::End); // terminated by `do`
    }
    expect_kw("do");
    r.body = parse_stmts({"ensure"});
    expect_kw("ensure");
    r.postcondition = parse_clauses({"end"});
    expect_kw("end");
    r.loop_count = next_loop_id_;

    for (const auto& it : across_iterators_) {
      if (!r.declares(it.name)) r.locals.push_back(it);
    }
    validate(r);
    return r;
  }

  void validate(const Routine& r) {
    // `old` may not appear in preconditions and every referenced variable
    // must be declared (parameter, output, local, or quantifier-bound).
    for (const auto& c : r.precondition) {
      if (contains_old(*c.expr)) fail("`old` is not allowed in preconditions");
    }
    auto check_vars = [&](const Expr& e, const char* where) {
      for (const auto& v : free_vars(e)) {
        if (!r.declares(v))
          fail("undeclared variable '" + v + "' in " + where + " of " + r.name);
      }
    };
    for (const auto& c : r.precondition) check_vars(*c.expr, "precondition");
    for (const auto& c : r.postcondition) check_vars(*c.expr, "postcondition");

    std::function<void(const std::vector<StmtPtr>&)> walk = [&](const auto& stmts) {
      for (const auto& sp : stmts) {
        std::visit(
            [&](const auto& s) {
              using T = std::decay_t<decltype(s)>;
              if constexpr (std::is_same_v<T, AssignStmt>) {
                if (!r.declares(s.target.var))
                  fail("assignment to undeclared variable '" + s.target.var + "' in " + r.name);
                check_vars(*s.value, "statement");
              } else if constexpr (std::is_same_v<T, IfStmt>) {
                check_vars(*s.cond, "statement");
                walk(s.then_branch);
                walk(s.else_branch);
              } else if constexpr (std::is_same_v<T, LoopStmt>) {
                walk(s.init);
                for (const auto& c : s.invariant) check_vars(*c.expr, "invariant");
                check_vars(*s.exit, "exit condition");
                if (s.variant) check_vars(*s.variant, "variant");
                walk(s.body);
              } else if constexpr (std::is_same_v<T, SwapStmt>) {
                if (!r.declares(s.array)) fail("swap on undeclared array '" + s.array + "'");
                check_vars(*s.i, "statement");
                check_vars(*s.j, "statement");
              } else if constexpr (std::is_same_v<T, NewStmt>) {
                if (!r.declares(s.var)) fail("new assigns to undeclared '" + s.var + "'");
                check_vars(*s.value, "statement");
              }
            },
            sp->node);
      }
    };
    walk(r.body);
  }

  Lexer lex_;
  std::string filename_;
  int next_loop_id_ = 0;
  std::vector<VarDecl> across_iterators_;
};

} // namespace

ExprPtr parse_expr(const std::string& text) {
  Parser p(text, "<expr>");
  return p.parse_single_expr();
}

std::vector<Routine> parse_routines(const std::string& text, const std::string& filename) {
  Parser p(text, filename);
  return p.parse_file();
}

Routine parse_routine(const std::string& text, const std::string& filename) {
  auto rs = parse_routines(text, filename);
  if (rs.size() != 1)
    throw ParseError(filename + ": expected exactly one routine, found " +
                         std::to_string(rs.size()),
                     SourcePos{});
  return rs.front();
}

} // namespace invwb
