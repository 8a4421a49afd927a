#pragma once

#include "gridhop/fields.hpp"
#include "gridhop/geom.hpp"

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gridhop {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// A call argument: number, string literal or nested expression.
using Arg = std::variant<double, std::string, ExprPtr>;

/// Built-in constructor call. `let` bindings are resolved at parse time, so a
/// bound name used twice becomes a shared child node.
struct Expr {
    std::string name;
    std::vector<Arg> args;
    int line = 0;
    int column = 0;
};

struct SceneAst {
    ExprPtr root;
    std::vector<Vec3> seeds;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, std::string message, std::string expected);

    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& message() const { return message_; }
    const std::string& expected() const { return expected_; }

private:
    int line_;
    int column_;
    std::string message_;
    std::string expected_;
};

/// Throws ParseError.
SceneAst parse_scene(std::string_view source);

/// Reads and parses a scene file. Throws std::runtime_error if unreadable.
SceneAst load_scene(const std::filesystem::path& path);

/// Canonical text form; parse_scene(print_scene(a)) is structurally equal to a.
std::string print_scene(const SceneAst& ast);
std::string print_expr(const Expr& e);

/// Name, argument and seed equality; source positions are ignored.
bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const SceneAst& a, const SceneAst& b);

/// Builds the field; nn(...) paths are resolved against base_dir.
Field build_field(const SceneAst& ast, const std::filesystem::path& base_dir = {});
Field build_field(const Expr& expr, const std::filesystem::path& base_dir = {});

/// Names accepted in call position.
std::vector<std::string> builtin_names();

}  // namespace gridhop
