#include "gridhop/scene.hpp"

#include "gridhop/nn.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace gridhop {

ParseError::ParseError(int line, int column, std::string message, std::string expected)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message +
                         (expected.empty() ? "" : " (expected " + expected + ")")),
      line_(line),
      column_(column),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

namespace {

constexpr int kMaxDepth = 256;

// Argument kinds: N number, S string, E expression. A trailing '+' repeats the last kind.
struct Signature {
    std::string_view kinds;
    std::string_view alt_kinds = "-";  // second accepted form; "-" when there is none
};

bool has_alt(const Signature& s) { return s.alt_kinds != "-"; }

const std::map<std::string, Signature, std::less<>>& builtins() {
    static const std::map<std::string, Signature, std::less<>> table = {
        {"sphere", {"N"}},
        {"box", {"NNN"}},
        {"box_exact", {"NNN"}},
        {"plane", {"NNNNNN"}},
        {"torus", {"NN"}},
        {"cylinder", {"NN"}},
        {"cone", {"NN"}},
        {"hex_prism", {"NN"}},
        {"capsule", {"NNNNNNN"}},
        {"genus2", {"", "N"}},
        {"genus2_blocks", {"NN"}},
        {"knot", {"NN"}},
        {"sierpinski", {"N"}},
        {"union", {"E+"}},
        {"intersection", {"E+"}},
        {"translate", {"ENNN"}},
        {"shrink", {"EN"}},
        {"scale", {"EN"}},
        {"nn", {"S"}},
    };
    return table;
}

char kind_of(const Arg& a) {
    if (std::holds_alternative<double>(a)) {
        return 'N';
    }
    if (std::holds_alternative<std::string>(a)) {
        return 'S';
    }
    return 'E';
}

bool matches(std::string_view kinds, const std::vector<Arg>& args) {
    if (!kinds.empty() && kinds.back() == '+') {
        const char rep = kinds[kinds.size() - 2];
        const std::size_t fixed = kinds.size() - 2;
        if (args.size() < fixed + 1) {
            return false;
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (kind_of(args[i]) != (i < fixed ? kinds[i] : rep)) {
                return false;
            }
        }
        return true;
    }
    if (args.size() != kinds.size()) {
        return false;
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (kind_of(args[i]) != kinds[i]) {
            return false;
        }
    }
    return true;
}

std::string describe(std::string_view kinds) {
    static const std::map<char, std::string> names = {{'N', "number"}, {'S', "string"}, {'E', "expression"}};
    if (kinds.empty()) {
        return "no arguments";
    }
    std::string out;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (kinds[i] == '+') {
            out += ", ...";
            continue;
        }
        if (!out.empty()) {
            out += ", ";
        }
        out += names.at(kinds[i]);
    }
    return out;
}

enum class Tok { Ident, Number, String, LParen, RParen, Comma, Semi, Equals, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

std::string token_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Number: return "number";
        case Tok::String: return "string";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::Semi: return "';'";
        case Tok::Equals: return "'='";
        case Tok::End: return "end of input";
    }
    return "token";
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_space();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= src_.size()) {
            return t;
        }
        const char c = src_[pos_];
        if (is_ident_start(c)) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) {
                advance();
            }
            t.kind = Tok::Ident;
            t.text = std::string(src_.substr(start, pos_ - start));
            return t;
        }
        if (is_digit(c) || c == '.' || c == '+' || c == '-') {
            return lex_number(t);
        }
        if (c == '"') {
            return lex_string(t);
        }
        static constexpr std::array<std::pair<char, Tok>, 5> punct = {
            {{'(', Tok::LParen}, {')', Tok::RParen}, {',', Tok::Comma}, {';', Tok::Semi}, {'=', Tok::Equals}}};
        for (const auto& [ch, kind] : punct) {
            if (c == ch) {
                advance();
                t.kind = kind;
                t.text = std::string(1, c);
                return t;
            }
        }
        throw ParseError(t.line, t.column, "unexpected character " + printable(c), "");
    }

private:
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    static std::string printable(char c) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f) {
            return std::string("'") + c + "'";
        }
        std::ostringstream s;
        s << "byte 0x" << std::hex << static_cast<int>(u);
        return s.str();
    }

    char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    advance();
                }
            } else {
                break;
            }
        }
    }

    void digits() {
        while (is_digit(peek())) {
            advance();
        }
    }

    Token lex_number(Token t) {
        const std::size_t start = pos_;
        if (peek() == '+' || peek() == '-') {
            advance();
        }
        const std::size_t mantissa = pos_;
        digits();
        bool have_digits = pos_ > mantissa;
        if (peek() == '.') {
            advance();
            const std::size_t frac = pos_;
            digits();
            have_digits = have_digits || pos_ > frac;
        }
        if (!have_digits) {
            throw ParseError(t.line, t.column, "malformed number", "digits");
        }
        if (peek() == 'e' || peek() == 'E') {
            advance();
            if (peek() == '+' || peek() == '-') {
                advance();
            }
            const std::size_t exp = pos_;
            digits();
            if (pos_ == exp) {
                throw ParseError(line_, column_, "malformed exponent", "digits");
            }
        }
        std::string text(src_.substr(start, pos_ - start));
        // from_chars rejects a leading '+'.
        const char* first = text.data() + (text.front() == '+' ? 1 : 0);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
            throw ParseError(t.line, t.column, "number out of range: " + text, "finite number");
        }
        t.kind = Tok::Number;
        t.number = value;
        t.text = std::move(text);
        return t;
    }

    Token lex_string(Token t) {
        advance();
        std::string value;
        while (true) {
            if (pos_ >= src_.size() || peek() == '\n') {
                throw ParseError(t.line, t.column, "unterminated string", "'\"'");
            }
            const char c = peek();
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                const char e = peek(1);
                if (e != '"' && e != '\\') {
                    throw ParseError(line_, column_, "unknown escape sequence", "\\\" or \\\\");
                }
                advance();
                advance();
                value += e;
                continue;
            }
            value += c;
            advance();
        }
        t.kind = Tok::String;
        t.text = std::move(value);
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { tok_ = lexer_.next(); }

    SceneAst parse() {
        SceneAst ast;
        std::optional<Token> emit_at;
        if (tok_.kind == Tok::End) {
            fail("empty scene", "'let', 'emit' or 'seed'");
        }
        while (tok_.kind != Tok::End) {
            if (tok_.kind != Tok::Ident) {
                fail("expected a statement", "'let', 'emit' or 'seed'");
            }
            if (tok_.text == "let") {
                parse_let();
            } else if (tok_.text == "emit") {
                const Token at = tok_;
                if (emit_at) {
                    fail("duplicate 'emit' (first at line " + std::to_string(emit_at->line) + ")", "");
                }
                emit_at = at;
                bump();
                ast.root = parse_expr(0);
                expect(Tok::Semi);
            } else if (tok_.text == "seed") {
                ast.seeds.push_back(parse_seed());
            } else {
                fail("unknown statement '" + tok_.text + "'", "'let', 'emit' or 'seed'");
            }
        }
        if (!emit_at) {
            fail("scene has no 'emit' statement", "'emit'");
        }
        return ast;
    }

private:
    [[noreturn]] void fail(const std::string& message, const std::string& expected) const {
        throw ParseError(tok_.line, tok_.column, message, expected);
    }

    void bump() { tok_ = lexer_.next(); }

    Token expect(Tok kind) {
        if (tok_.kind != kind) {
            fail("unexpected " + token_name(tok_.kind), token_name(kind));
        }
        Token t = tok_;
        bump();
        return t;
    }

    static bool is_keyword(const std::string& s) { return s == "let" || s == "emit" || s == "seed"; }

    void parse_let() {
        bump();
        if (tok_.kind != Tok::Ident) {
            fail("unexpected " + token_name(tok_.kind), "identifier");
        }
        const Token name = tok_;
        if (is_keyword(name.text) || builtins().count(name.text) != 0) {
            fail("'" + name.text + "' is reserved", "identifier");
        }
        if (bindings_.count(name.text) != 0) {
            fail("'" + name.text + "' is already bound", "");
        }
        bump();
        expect(Tok::Equals);
        defining_ = name.text;
        ExprPtr value = parse_expr(0);
        defining_.clear();
        expect(Tok::Semi);
        bindings_.emplace(name.text, std::move(value));
    }

    Vec3 parse_seed() {
        const Token at = tok_;
        bump();
        expect(Tok::LParen);
        Vec3 p;
        for (int axis = 0; axis < 3; ++axis) {
            if (axis > 0) {
                expect(Tok::Comma);
            }
            p[axis] = expect(Tok::Number).number;
        }
        expect(Tok::RParen);
        expect(Tok::Semi);
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(p[axis]) > 0.5) {
                throw ParseError(at.line, at.column, "seed lies outside the unit cube", "coordinates in [-0.5, 0.5]");
            }
        }
        return p;
    }

    ExprPtr parse_expr(int depth) {
        if (depth > kMaxDepth) {
            fail("expression nested too deeply", "");
        }
        if (tok_.kind != Tok::Ident) {
            fail("unexpected " + token_name(tok_.kind), "expression");
        }
        const Token name = tok_;
        bump();
        if (name.text == defining_) {
            throw ParseError(name.line, name.column, "cyclic reference to '" + name.text + "'", "");
        }
        if (tok_.kind != Tok::LParen) {
            const auto bound = bindings_.find(name.text);
            if (bound != bindings_.end()) {
                return bound->second;
            }
            if (builtins().count(name.text) != 0) {
                fail("call to '" + name.text + "' needs an argument list", "'('");
            }
            throw ParseError(name.line, name.column, "unknown identifier '" + name.text + "'", "bound name");
        }
        const auto sig = builtins().find(name.text);
        if (sig == builtins().end()) {
            throw ParseError(name.line, name.column, "unknown function '" + name.text + "'", "built-in constructor");
        }
        bump();
        auto expr = std::make_shared<Expr>();
        expr->name = name.text;
        expr->line = name.line;
        expr->column = name.column;
        if (tok_.kind != Tok::RParen) {
            expr->args.push_back(parse_arg(depth));
            while (tok_.kind == Tok::Comma) {
                bump();
                expr->args.push_back(parse_arg(depth));
            }
        }
        expect(Tok::RParen);
        const Signature& s = sig->second;
        if (!matches(s.kinds, expr->args) && !(has_alt(s) && matches(s.alt_kinds, expr->args))) {
            std::string expected = describe(s.kinds);
            if (has_alt(s)) {
                expected += " or " + describe(s.alt_kinds);
            }
            throw ParseError(name.line, name.column, "wrong arguments for '" + name.text + "'", expected);
        }
        return expr;
    }

    Arg parse_arg(int depth) {
        if (tok_.kind == Tok::Number) {
            const double v = tok_.number;
            bump();
            return v;
        }
        if (tok_.kind == Tok::String) {
            std::string s = tok_.text;
            bump();
            return s;
        }
        return parse_expr(depth + 1);
    }

    Lexer lexer_;
    Token tok_;
    std::unordered_map<std::string, ExprPtr> bindings_;
    std::string defining_;
};

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    return out + "\"";
}

void print_into(const Expr& e, std::string& out) {
    out += e.name;
    out += '(';
    for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        const Arg& a = e.args[i];
        if (const auto* d = std::get_if<double>(&a)) {
            out += format_number(*d);
        } else if (const auto* s = std::get_if<std::string>(&a)) {
            out += quote(*s);
        } else {
            print_into(*std::get<ExprPtr>(a), out);
        }
    }
    out += ')';
}

double num(const Expr& e, std::size_t i) { return std::get<double>(e.args[i]); }

Vec3 vec(const Expr& e, std::size_t i) { return {num(e, i), num(e, i + 1), num(e, i + 2)}; }

int integer(const Expr& e, std::size_t i, const char* what) {
    const double v = num(e, i);
    if (v != std::floor(v) || v < 1 || v > 1e9) {
        throw FieldError(std::string(what) + " must be a positive integer");
    }
    return static_cast<int>(v);
}

class FieldBuilder {
public:
    explicit FieldBuilder(std::filesystem::path base) : base_(std::move(base)) {}

    Field build(const Expr& e) {
        const auto cached = cache_.find(&e);
        if (cached != cache_.end()) {
            return cached->second;
        }
        Field f = make(e);
        cache_.emplace(&e, f);
        return f;
    }

private:
    Field child(const Expr& e, std::size_t i) { return build(*std::get<ExprPtr>(e.args[i])); }

    Field make(const Expr& e) {
        const std::string& n = e.name;
        if (n == "sphere") return sphere(num(e, 0));
        if (n == "box") return box(vec(e, 0));
        if (n == "box_exact") return box_exact(vec(e, 0));
        if (n == "plane") {
            const Vec3 normal = vec(e, 0);
            const double len = norm(normal);
            if (!(len > 0.0) || !std::isfinite(len)) {
                throw FieldError("plane normal must be non-zero");
            }
            return plane({normal / len, vec(e, 3)});
        }
        if (n == "torus") return torus(num(e, 0), num(e, 1));
        if (n == "cylinder") return cylinder(num(e, 0), num(e, 1));
        if (n == "cone") return cone(num(e, 0), num(e, 1));
        if (n == "hex_prism") return hex_prism(num(e, 0), num(e, 1));
        if (n == "capsule") return capsule(vec(e, 0), vec(e, 3), num(e, 6));
        if (n == "genus2") return e.args.empty() ? genus2() : genus2(num(e, 0));
        if (n == "genus2_blocks") return genus2_blocks(num(e, 0), integer(e, 1, "block count"));
        if (n == "knot") return knot_tube(integer(e, 0, "knot sample count"), num(e, 1));
        if (n == "sierpinski") return sierpinski_tetra(integer(e, 0, "sierpinski iteration count"));
        if (n == "union" || n == "intersection") {
            std::vector<Field> members;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                members.push_back(child(e, i));
            }
            return n == "union" ? union_of(std::move(members)) : intersection_of(std::move(members));
        }
        if (n == "translate") return translate(child(e, 0), vec(e, 1));
        if (n == "shrink") return shrink(child(e, 0), num(e, 1));
        if (n == "scale") return scale_uniform(child(e, 0), num(e, 1));
        if (n == "nn") {
            std::filesystem::path p = std::get<std::string>(e.args[0]);
            if (p.is_relative() && !base_.empty()) {
                p = base_ / p;
            }
            return nn_field(load_weights(p));
        }
        throw FieldError("unknown constructor '" + n + "'");
    }

    std::filesystem::path base_;
    std::unordered_map<const Expr*, Field> cache_;
};

}  // namespace

SceneAst parse_scene(std::string_view source) { return Parser(source).parse(); }

SceneAst load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open scene file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene(text.str());
}

std::string print_expr(const Expr& e) {
    std::string out;
    print_into(e, out);
    return out;
}

std::string print_scene(const SceneAst& ast) {
    std::string out;
    for (const Vec3& s : ast.seeds) {
        out += "seed(" + format_number(s.x) + ", " + format_number(s.y) + ", " + format_number(s.z) + ");\n";
    }
    out += "emit ";
    print_into(*ast.root, out);
    out += ";\n";
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.name != b.name || a.args.size() != b.args.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        const Arg& x = a.args[i];
        const Arg& y = b.args[i];
        if (x.index() != y.index()) {
            return false;
        }
        if (const auto* d = std::get_if<double>(&x)) {
            if (*d != std::get<double>(y)) {
                return false;
            }
        } else if (const auto* s = std::get_if<std::string>(&x)) {
            if (*s != std::get<std::string>(y)) {
                return false;
            }
        } else if (!structurally_equal(*std::get<ExprPtr>(x), *std::get<ExprPtr>(y))) {
            return false;
        }
    }
    return true;
}

bool structurally_equal(const SceneAst& a, const SceneAst& b) {
    return a.seeds == b.seeds && a.root && b.root && structurally_equal(*a.root, *b.root);
}

Field build_field(const Expr& expr, const std::filesystem::path& base_dir) {
    return FieldBuilder(base_dir).build(expr);
}

Field build_field(const SceneAst& ast, const std::filesystem::path& base_dir) {
    return build_field(*ast.root, base_dir);
}

std::vector<std::string> builtin_names() {
    std::vector<std::string> out;
    for (const auto& [name, sig] : builtins()) {
        out.push_back(name);
    }
    return out;
}

}  // namespace gridhop
