#pragma once
// `{name}` placeholder templates and tagged-response parsing.

#include <set>
#include <map>
#include <string>
#include <string_view>

#include "fdescent/error.hpp"
#include "fdescent/io/assets.hpp"
#include "fdescent/util/text.hpp"

namespace fdescent::llm {

namespace detail {

inline bool ident_start(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool ident_char(char c) noexcept { return ident_start(c) || (c >= '0' && c <= '9'); }

// Length of a `{ident}` token starting at body[i], or 0 when there is none.
inline std::size_t placeholder_at(std::string_view body, std::size_t i) noexcept {
    if (body[i] != '{' || i + 1 >= body.size() || !ident_start(body[i + 1])) return 0;
    std::size_t j = i + 2;
    while (j < body.size() && ident_char(body[j])) ++j;
    return j < body.size() && body[j] == '}' ? j - i + 1 : 0;
}

}  // namespace detail

class PromptTemplate {
public:
    PromptTemplate() = default;

    // Every placeholder found in `body` is required.
    PromptTemplate(std::string name, std::string body) : name_(std::move(name)), body_(std::move(body)) {
        required_ = placeholders();
    }

    PromptTemplate(std::string name, std::string body, std::set<std::string> required)
        : name_(std::move(name)), body_(std::move(body)), required_(std::move(required)) {}

    static PromptTemplate load(const std::string& name) {
        return PromptTemplate(name, io::read_file(io::asset_dir() / "templates" / (name + ".txt")));
    }

    const std::string& name() const noexcept { return name_; }
    const std::string& body() const noexcept { return body_; }
    const std::set<std::string>& required() const noexcept { return required_; }

    std::set<std::string> placeholders() const {
        std::set<std::string> out;
        for (std::size_t i = 0; i < body_.size(); ++i) {
            if (const auto n = detail::placeholder_at(body_, i)) {
                out.insert(body_.substr(i + 1, n - 2));
                i += n - 1;
            }
        }
        return out;
    }

    // Single left-to-right pass: bound values are copied verbatim and never
    // scanned again. Unbound optional placeholders are left as written.
    std::string render(const std::map<std::string, std::string>& bindings) const {
        for (const auto& key : required_) {
            if (!bindings.contains(key)) throw TemplateError("template '" + name_ + "': missing placeholder {" + key + "}");
        }
        std::string out;
        out.reserve(body_.size());
        for (std::size_t i = 0; i < body_.size(); ++i) {
            const auto n = detail::placeholder_at(body_, i);
            if (n == 0) {
                out += body_[i];
                continue;
            }
            const auto it = bindings.find(body_.substr(i + 1, n - 2));
            out += it == bindings.end() ? body_.substr(i, n) : it->second;
            i += n - 1;
        }
        return out;
    }

private:
    std::string name_;
    std::string body_;
    std::set<std::string> required_;
};

inline std::string render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& bindings) {
    return t.render(bindings);
}

// Content of the first `<tag>...</tag>` pair, trimmed.
inline std::string parse_tagged(std::string_view response, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto b = response.find(open);
    if (b == std::string_view::npos) {
        throw ParseError("missing <" + std::string(tag) + "> tag", std::string(response));
    }
    const auto start = b + open.size();
    const auto e = response.find(close, start);
    if (e == std::string_view::npos) {
        throw ParseError("unclosed <" + std::string(tag) + "> tag", std::string(response));
    }
    return std::string(util::trim(response.substr(start, e - start)));
}

}  // namespace fdescent::llm
