#include "ctp/dsl.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace ctp::dsl {

namespace {

enum class Tok { Ident, Number, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t number = 0;
  SourceSpan span;
};

std::string describe(const Token &t) {
  switch (t.kind) {
  case Tok::Ident:
    return "identifier '" + t.text + "'";
  case Tok::Number:
    return "number " + t.text;
  case Tok::Symbol:
    return "'" + t.text + "'";
  case Tok::End:
    return "end of input";
  }
  return "?";
}

class Lexer {
public:
  Lexer(std::string_view text, std::vector<ParseError> &errors) : text_(text), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.span = here();
      if (pos_ >= text_.size()) {
        t.kind = Tok::End;
        t.span.end = t.span.start;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (is_alpha(c)) {
        std::size_t b = pos_;
        while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_])))
          advance();
        t.kind = Tok::Ident;
        t.text = std::string(text_.substr(b, pos_ - b));
      } else if (is_digit(c)) {
        std::size_t b = pos_;
        while (pos_ < text_.size() && is_digit(text_[pos_]))
          advance();
        t.kind = Tok::Number;
        t.text = std::string(text_.substr(b, pos_ - b));
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (ec != std::errc() || p != t.text.data() + t.text.size() || t.number > (1LL << 40)) {
          t.span.end = pos_;
          errors_.push_back({ErrorKind::Lexical, "number out of range: " + t.text, t.span, {}});
          t.number = 0;
        }
      } else if (auto sym = symbol_at(); !sym.empty()) {
        for (std::size_t i = 0; i < sym.size(); ++i)
          advance();
        t.kind = Tok::Symbol;
        t.text = std::string(sym);
      } else {
        advance();
        t.span.end = pos_;
        std::string shown = (static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f)
                                ? std::string(1, c)
                                : "\\x" + hex(static_cast<unsigned char>(c));
        errors_.push_back({ErrorKind::Lexical, "unexpected character '" + shown + "'", t.span, {}});
        continue;
      }
      t.span.end = pos_;
      out.push_back(std::move(t));
    }
  }

private:
  static bool is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  static std::string hex(unsigned char c) {
    const char *digits = "0123456789abcdef";
    return {digits[c >> 4], digits[c & 15]};
  }

  std::string_view symbol_at() const {
    static constexpr std::string_view two[] = {"->", "&&", "<=", ">=", "=="};
    static constexpr std::string_view one[] = {"{", "}", "(", ")", ";", ",", ":",
                                               "|", "<", ">", "="};
    auto rest = text_.substr(pos_);
    for (auto s : two)
      if (rest.substr(0, 2) == s)
        return s;
    for (auto s : one)
      if (rest.substr(0, 1) == s)
        return s;
    return {};
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceSpan here() const { return {pos_, pos_, line_, col_}; }

  std::string_view text_;
  std::vector<ParseError> &errors_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Syntax tree (names unresolved)

struct Name {
  std::string text;
  SourceSpan span;
};

struct AstGuard {
  Name clock;
  Cmp op = Cmp::Le;
  std::int64_t constant = 0;
};

struct AstAction {
  ActionKind kind = ActionKind::Internal;
  Name channel;
  Name message;
  Name counter;
  std::string label;
};

struct AstTransition {
  Name from;
  Name to;
  AstAction action;
  std::vector<AstGuard> guard;
  std::vector<Name> resets;
  SourceSpan span;
};

struct AstProcess {
  Name name;
  std::vector<Name> locations;
  std::vector<Name> initial;
  std::vector<Name> finals;
  std::vector<Name> clocks;
  std::vector<Name> counters;
  std::vector<AstTransition> transitions;
  SourceSpan span;
};

struct AstChannel {
  Name name;
  Name source;
  Name target;
  bool testable = false;
  SourceSpan span;
};

struct AstSystem {
  Name name;
  std::optional<DelayKind> delay;
  std::vector<Name> messages;
  Acceptance acceptance;
  std::vector<AstProcess> processes;
  std::vector<AstChannel> channels;
  SourceSpan span;
};

struct SyntaxFailure {};

class Parser {
public:
  Parser(std::vector<Token> toks, std::vector<ParseError> &errors)
      : toks_(std::move(toks)), errors_(errors) {}

  std::optional<AstSystem> run() {
    AstSystem sys;
    try {
      sys.span = peek().span;
      expect_keyword("system");
      sys.name = expect_ident("system name");
      expect_symbol("{");
    } catch (const SyntaxFailure &) {
      return std::nullopt;
    }
    while (!at_symbol("}") && peek().kind != Tok::End) {
      std::size_t before = pos_;
      try {
        top_item(sys);
      } catch (const SyntaxFailure &) {
        synchronize();
      }
      if (pos_ == before)
        ++pos_;
    }
    try {
      expect_symbol("}");
      if (peek().kind != Tok::End)
        fail({"end of input"});
    } catch (const SyntaxFailure &) {
    }
    sys.span.end = toks_[pos_ > 0 ? pos_ - 1 : 0].span.end;
    return sys;
  }

private:
  const Token &peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1)
      ++pos_;
    return t;
  }

  bool at_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Symbol && peek(ahead).text == s;
  }
  bool at_keyword(std::string_view s) const {
    return peek().kind == Tok::Ident && peek().text == s;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    const Token &t = peek();
    std::string msg = "expected ";
    for (std::size_t i = 0; i < expected.size(); ++i)
      msg += (i ? (i + 1 == expected.size() ? " or " : ", ") : "") + expected[i];
    msg += ", found " + describe(t);
    errors_.push_back({ErrorKind::Syntax, msg, t.span, std::move(expected)});
    throw SyntaxFailure{};
  }

  void expect_symbol(std::string_view s) {
    if (!at_symbol(s))
      fail({"'" + std::string(s) + "'"});
    next();
  }
  void expect_keyword(std::string_view s) {
    if (!at_keyword(s))
      fail({"'" + std::string(s) + "'"});
    next();
  }
  Name expect_ident(const std::string &what) {
    if (peek().kind != Tok::Ident)
      fail({what});
    Token t = next();
    return {t.text, t.span};
  }
  bool accept_symbol(std::string_view s) {
    if (at_symbol(s)) {
      next();
      return true;
    }
    return false;
  }

  // skip to just past the next ';' (or before a '}') at the current depth
  void synchronize() {
    int depth = 0;
    while (peek().kind != Tok::End) {
      if (at_symbol("{")) {
        ++depth;
      } else if (at_symbol("}")) {
        if (depth == 0)
          return;
        --depth;
        if (depth == 0) {
          next();
          return;
        }
      } else if (at_symbol(";") && depth == 0) {
        next();
        return;
      }
      next();
    }
  }

  std::vector<Name> ident_block(const std::string &what) {
    expect_symbol("{");
    std::vector<Name> out;
    if (!at_symbol("}")) {
      out.push_back(expect_ident(what));
      while (accept_symbol(","))
        out.push_back(expect_ident(what));
    }
    expect_symbol("}");
    accept_symbol(";");
    return out;
  }

  std::vector<Name> ident_list(const std::string &what) {
    std::vector<Name> out;
    out.push_back(expect_ident(what));
    while (accept_symbol(","))
      out.push_back(expect_ident(what));
    return out;
  }

  void top_item(AstSystem &sys) {
    if (at_keyword("delay")) {
      next();
      Name k = expect_ident("'discrete', 'dense' or 'none'");
      if (k.text == "discrete")
        sys.delay = DelayKind::Tick;
      else if (k.text == "dense")
        sys.delay = DelayKind::Dense;
      else if (k.text == "none")
        sys.delay = DelayKind::None;
      else {
        --pos_;
        fail({"'discrete'", "'dense'", "'none'"});
      }
      expect_symbol(";");
    } else if (at_keyword("msgs")) {
      next();
      auto ms = ident_block("message name");
      sys.messages.insert(sys.messages.end(), ms.begin(), ms.end());
    } else if (at_keyword("accept")) {
      next();
      acceptance_block(sys.acceptance);
    } else if (at_keyword("process")) {
      process(sys);
    } else if (at_keyword("channel")) {
      AstChannel ch;
      ch.span = peek().span;
      next();
      ch.name = expect_ident("channel name");
      expect_symbol(":");
      ch.source = expect_ident("source process");
      expect_symbol("->");
      ch.target = expect_ident("target process");
      if (at_keyword("testable")) {
        next();
        ch.testable = true;
      }
      ch.span.end = peek().span.end;
      expect_symbol(";");
      sys.channels.push_back(std::move(ch));
    } else {
      fail({"'delay'", "'msgs'", "'accept'", "'process'", "'channel'", "'}'"});
    }
  }

  void acceptance_block(Acceptance &acc) {
    expect_symbol("{");
    while (!at_symbol("}")) {
      Name what = expect_ident("'channels', 'counters' or 'clocks'");
      Name value = expect_ident("'empty', 'zero' or 'any'");
      bool strict = value.text != "any";
      auto bad_value = [&](const char *want) {
        --pos_;
        fail({want, "'any'"});
      };
      if (what.text == "channels") {
        if (strict && value.text != "empty")
          bad_value("'empty'");
        acc.empty_channels = strict;
      } else if (what.text == "counters" || what.text == "clocks") {
        if (strict && value.text != "zero")
          bad_value("'zero'");
        (what.text == "counters" ? acc.zero_counters : acc.zero_clocks) = strict;
      } else {
        pos_ -= 2;
        fail({"'channels'", "'counters'", "'clocks'"});
      }
      expect_symbol(";");
    }
    expect_symbol("}");
    accept_symbol(";");
  }

  void process(AstSystem &sys) {
    AstProcess p;
    p.span = peek().span;
    next();
    p.name = expect_ident("process name");
    expect_symbol("{");
    while (!at_symbol("}") && peek().kind != Tok::End) {
      std::size_t before = pos_;
      try {
        process_item(p);
      } catch (const SyntaxFailure &) {
        synchronize();
      }
      if (pos_ == before)
        next();
    }
    p.span.end = peek().span.end;
    expect_symbol("}");
    accept_symbol(";");
    sys.processes.push_back(std::move(p));
  }

  void process_item(AstProcess &p) {
    // a transition starts with `<ident> ->`, which disambiguates locations
    // named like keywords
    if (peek().kind == Tok::Ident && at_symbol("->", 1)) {
      transition(p);
      return;
    }
    if (at_keyword("init")) {
      next();
      auto ls = ident_list("location name");
      p.initial.insert(p.initial.end(), ls.begin(), ls.end());
      expect_symbol(";");
    } else if (at_keyword("final")) {
      next();
      auto ls = ident_list("location name");
      p.finals.insert(p.finals.end(), ls.begin(), ls.end());
      expect_symbol(";");
    } else if (at_keyword("locations")) {
      next();
      auto ls = ident_block("location name");
      p.locations.insert(p.locations.end(), ls.begin(), ls.end());
    } else if (at_keyword("clocks")) {
      next();
      auto xs = ident_block("clock name");
      p.clocks.insert(p.clocks.end(), xs.begin(), xs.end());
    } else if (at_keyword("counters")) {
      next();
      auto xs = ident_block("counter name");
      p.counters.insert(p.counters.end(), xs.begin(), xs.end());
    } else {
      fail({"'init'", "'final'", "'locations'", "'clocks'", "'counters'", "transition",
            "'}'"});
    }
  }

  AstAction action() {
    AstAction a;
    if (peek().kind != Tok::Ident)
      fail({"action"});
    Token t = next();
    const std::string &k = t.text;
    if (k == "send" || k == "recv") {
      a.kind = k == "send" ? ActionKind::Send : ActionKind::Recv;
      expect_symbol("(");
      a.channel = expect_ident("channel name");
      expect_symbol(",");
      a.message = expect_ident("message name");
      expect_symbol(")");
    } else if (k == "empty") {
      a.kind = ActionKind::TestEmpty;
      expect_symbol("(");
      a.channel = expect_ident("channel name");
      expect_symbol(")");
    } else if (k == "tick") {
      a.kind = ActionKind::Tick;
    } else if (k == "tau") {
      a.kind = ActionKind::Internal;
    } else if (k == "internal") {
      a.kind = ActionKind::Internal;
      if (accept_symbol("(")) {
        a.label = expect_ident("action label").text;
        expect_symbol(")");
      }
    } else if (k == "inc" || k == "dec" || k == "ztest") {
      a.kind = k == "inc" ? ActionKind::Inc : k == "dec" ? ActionKind::Dec : ActionKind::ZeroTest;
      a.counter = expect_ident("counter name");
    } else {
      --pos_;
      fail({"'send'", "'recv'", "'empty'", "'tick'", "'tau'", "'internal'", "'inc'", "'dec'",
            "'ztest'"});
    }
    return a;
  }

  AstGuard guard_atom() {
    AstGuard g;
    g.clock = expect_ident("clock name");
    if (peek().kind != Tok::Symbol)
      fail({"comparison operator"});
    const std::string op = peek().text;
    if (op == "<")
      g.op = Cmp::Lt;
    else if (op == "<=")
      g.op = Cmp::Le;
    else if (op == "=" || op == "==")
      g.op = Cmp::Eq;
    else if (op == ">=")
      g.op = Cmp::Ge;
    else if (op == ">")
      g.op = Cmp::Gt;
    else
      fail({"comparison operator"});
    next();
    if (peek().kind != Tok::Number)
      fail({"natural number"});
    g.constant = next().number;
    return g;
  }

  void transition(AstProcess &p) {
    SourceSpan span = peek().span;
    Name from = expect_ident("location name");
    expect_symbol("->");
    Name to = expect_ident("location name");
    expect_symbol(":");
    std::vector<AstAction> actions;
    actions.push_back(action());
    while (accept_symbol("|"))
      actions.push_back(action());
    std::vector<AstGuard> guard;
    std::vector<Name> resets;
    if (at_keyword("when")) {
      next();
      guard.push_back(guard_atom());
      while (accept_symbol("&&"))
        guard.push_back(guard_atom());
    }
    if (at_keyword("reset")) {
      next();
      expect_symbol("{");
      if (!at_symbol("}")) {
        resets.push_back(expect_ident("clock name"));
        while (accept_symbol(","))
          resets.push_back(expect_ident("clock name"));
      }
      expect_symbol("}");
    }
    span.end = peek().span.end;
    expect_symbol(";");
    for (auto &a : actions)
      p.transitions.push_back({from, to, std::move(a), guard, resets, span});
  }

  std::vector<Token> toks_;
  std::vector<ParseError> &errors_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Name resolution

class Resolver {
public:
  explicit Resolver(std::vector<ParseError> &errors) : errors_(errors) {}

  std::optional<System> run(const AstSystem &ast) {
    System sys;
    sys.name = ast.name.text;
    sys.acceptance = ast.acceptance;
    if (!ast.delay)
      semantic("missing 'delay' declaration", ast.span);
    sys.delay = ast.delay.value_or(DelayKind::Tick);

    auto &topo = sys.topology;
    std::map<std::string, std::uint32_t> procs, msgs, chans;
    for (const auto &m : ast.messages) {
      if (!msgs.emplace(m.text, static_cast<std::uint32_t>(topo.messages.size())).second)
        semantic("duplicate message '" + m.text + "'", m.span);
      else
        topo.messages.push_back(m.text);
    }
    for (const auto &p : ast.processes) {
      if (!procs.emplace(p.name.text, static_cast<std::uint32_t>(topo.processes.size())).second)
        semantic("duplicate process '" + p.name.text + "'", p.name.span);
      else
        topo.processes.push_back(p.name.text);
    }
    for (const auto &c : ast.channels) {
      auto src = procs.find(c.source.text);
      auto dst = procs.find(c.target.text);
      if (src == procs.end())
        semantic("undeclared process '" + c.source.text + "'", c.source.span);
      if (dst == procs.end())
        semantic("undeclared process '" + c.target.text + "'", c.target.span);
      if (src == procs.end() || dst == procs.end())
        continue;
      if (!chans.emplace(c.name.text, static_cast<std::uint32_t>(topo.channels.size())).second) {
        semantic("duplicate channel '" + c.name.text + "'", c.name.span);
        continue;
      }
      topo.channels.push_back({c.name.text, src->second, dst->second, c.testable, c.span});
    }

    std::set<std::string> seen_procs;
    for (const auto &p : ast.processes) {
      if (!seen_procs.insert(p.name.text).second)
        continue;
      sys.automata.push_back(automaton(p, chans, msgs));
    }

    if (errors_.empty()) {
      for (auto &d : validate_system(sys))
        semantic(d.message, d.span.value_or(ast.span));
    }
    if (!errors_.empty())
      return std::nullopt;
    canonicalize(sys);
    return sys;
  }

private:
  void semantic(std::string msg, SourceSpan span) {
    errors_.push_back({ErrorKind::Semantic, std::move(msg), span, {}});
  }

  Automaton automaton(const AstProcess &p, const std::map<std::string, std::uint32_t> &chans,
                      const std::map<std::string, std::uint32_t> &msgs) {
    Automaton a;
    a.span = p.span;
    std::map<std::string, LocationId> locs;
    auto loc = [&](const Name &n) {
      auto [it, fresh] = locs.emplace(n.text, static_cast<LocationId>(a.locations.size()));
      if (fresh)
        a.locations.push_back(n.text);
      return it->second;
    };
    std::set<std::string> declared;
    for (const auto &l : p.locations) {
      if (!declared.insert(l.text).second)
        semantic("duplicate location '" + l.text + "' in process '" + p.name.text + "'", l.span);
      loc(l);
    }
    for (const auto &l : p.initial)
      a.initial.push_back(loc(l));
    for (const auto &l : p.finals)
      a.final_locations.push_back(loc(l));

    auto declare = [&](const std::vector<Name> &names, std::vector<std::string> &out,
                       const char *what) {
      std::map<std::string, std::uint32_t> idx;
      for (const auto &n : names) {
        if (!idx.emplace(n.text, static_cast<std::uint32_t>(out.size())).second)
          semantic(std::string("duplicate ") + what + " '" + n.text + "'", n.span);
        else
          out.push_back(n.text);
      }
      return idx;
    };
    auto clocks = declare(p.clocks, a.clocks, "clock");
    auto counters = declare(p.counters, a.counters, "counter");

    auto lookup = [&](const std::map<std::string, std::uint32_t> &table, const Name &n,
                      const char *what) -> std::uint32_t {
      auto it = table.find(n.text);
      if (it == table.end()) {
        semantic(std::string("undeclared ") + what + " '" + n.text + "'", n.span);
        return 0;
      }
      return it->second;
    };

    for (const auto &t : p.transitions) {
      Transition tr;
      tr.span = t.span;
      tr.from = loc(t.from);
      tr.to = loc(t.to);
      tr.action.kind = t.action.kind;
      tr.action.label = t.action.label;
      switch (t.action.kind) {
      case ActionKind::Send:
      case ActionKind::Recv:
        tr.action.channel = lookup(chans, t.action.channel, "channel");
        tr.action.message = lookup(msgs, t.action.message, "message");
        break;
      case ActionKind::TestEmpty:
        tr.action.channel = lookup(chans, t.action.channel, "channel");
        break;
      case ActionKind::Inc:
      case ActionKind::Dec:
      case ActionKind::ZeroTest:
        tr.action.counter = lookup(counters, t.action.counter, "counter");
        break;
      default:
        break;
      }
      for (const auto &g : t.guard)
        tr.guard.push_back({lookup(clocks, g.clock, "clock"), g.op, g.constant});
      for (const auto &r : t.resets)
        tr.resets.push_back(lookup(clocks, r, "clock"));
      a.transitions.push_back(std::move(tr));
    }
    return a;
  }

  std::vector<ParseError> &errors_;
};

void write_list(std::ostream &os, const std::vector<std::string> &names) {
  os << "{";
  for (std::size_t i = 0; i < names.size(); ++i)
    os << (i ? ", " : " ") << names[i];
  os << (names.empty() ? "}" : " }");
}

} // namespace

ParseResult parse(std::string_view text) {
  ParseResult result;
  auto toks = Lexer(text, result.errors).run();
  auto ast = Parser(std::move(toks), result.errors).run();
  if (!ast || !result.errors.empty())
    return result;
  result.system = Resolver(result.errors).run(*ast);
  return result;
}

std::string serialize(const System &input) {
  System sys = input;
  canonicalize(sys);
  std::ostringstream os;
  const auto &topo = sys.topology;
  os << "system " << sys.name << " {\n";
  os << "  delay " << to_string(sys.delay) << ";\n";
  os << "  msgs ";
  write_list(os, topo.messages);
  os << ";\n";
  if (sys.acceptance != Acceptance{}) {
    const auto &acc = sys.acceptance;
    os << "  accept { channels " << (acc.empty_channels ? "empty" : "any") << "; counters "
       << (acc.zero_counters ? "zero" : "any") << "; clocks " << (acc.zero_clocks ? "zero" : "any")
       << "; }\n";
  }
  for (std::size_t p = 0; p < topo.processes.size() && p < sys.automata.size(); ++p) {
    const auto &a = sys.automata[p];
    os << "  process " << topo.processes[p] << " {\n";
    if (!a.locations.empty()) {
      os << "    locations ";
      write_list(os, a.locations);
      os << ";\n";
    }
    auto loc_list = [&](const char *kw, const std::vector<LocationId> &ls) {
      if (ls.empty())
        return;
      os << "    " << kw;
      for (std::size_t i = 0; i < ls.size(); ++i)
        os << (i ? ", " : " ") << a.locations[ls[i]];
      os << ";\n";
    };
    loc_list("init", a.initial);
    loc_list("final", a.final_locations);
    if (!a.clocks.empty()) {
      os << "    clocks ";
      write_list(os, a.clocks);
      os << ";\n";
    }
    if (!a.counters.empty()) {
      os << "    counters ";
      write_list(os, a.counters);
      os << ";\n";
    }
    for (const auto &t : a.transitions)
      os << "    " << format_transition(sys, static_cast<ProcessId>(p), t) << ";\n";
    os << "  }\n";
  }
  for (const auto &c : topo.channels) {
    os << "  channel " << c.name << " : " << topo.processes[c.source] << " -> "
       << topo.processes[c.target] << (c.testable ? " testable" : "") << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string format_error(const ParseError &e) {
  const char *kind = e.kind == ErrorKind::Lexical  ? "lexical error"
                     : e.kind == ErrorKind::Syntax ? "syntax error"
                                                   : "error";
  return std::to_string(e.span.line) + ":" + std::to_string(e.span.column) + ": " + kind + ": " +
         e.message;
}

System parse_or_throw(std::string_view text) {
  auto r = parse(text);
  if (!r.ok()) {
    std::string msg;
    for (const auto &e : r.errors)
      msg += format_error(e) + "\n";
    throw Error(msg);
  }
  return std::move(*r.system);
}

} // namespace ctp::dsl
