#include "apsf/templates.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <apsf/builtin_templates.hpp>

#include "apsf/error.hpp"

namespace apsf {

namespace {

bool identifier_shaped(const std::string& name) {
    if (name.empty()) return false;
    for (unsigned char c : name)
        if (!std::isalnum(c) && c != '_') return false;
    return true;
}

} // namespace

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        char c = tpl[pos];
        if (c != '{') {
            out.push_back(c);
            ++pos;
            continue;
        }
        std::size_t close = tpl.find('}', pos + 1);
        if (close == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        std::string name = tpl.substr(pos + 1, close - pos - 1);
        if (!identifier_shaped(name)) {
            out.push_back('{');
            ++pos;
            continue;
        }
        auto it = values.find(name);
        if (it == values.end())
            throw Error(ErrorKind::TemplateError, "no binding for {" + name + "}");
        out += it->second;
        pos = close + 1;
    }
    return out;
}

namespace {

const std::map<std::string, const char*>& builtin_map() {
    static const std::map<std::string, const char*> map = {
        {"structure_from_scratch", builtin::structure_from_scratch},
        {"structure_from_initial", builtin::structure_from_initial},
        {"factor_edit", builtin::factor_edit},
        {"whole_prompt_edit", builtin::whole_prompt_edit},
        {"error_diagnosis", builtin::error_diagnosis},
        {"factor_selection", builtin::factor_selection},
    };
    return map;
}

} // namespace

std::string load_template(const std::string& name, const std::string& templates_dir) {
    if (!templates_dir.empty()) {
        std::filesystem::path path = std::filesystem::path(templates_dir) / (name + ".txt");
        std::ifstream in(path);
        if (in) {
            std::ostringstream buffer;
            buffer << in.rdbuf();
            std::string text = buffer.str();
            if (!text.empty() && text.back() == '\n') text.pop_back();
            return text;
        }
    }
    auto it = builtin_map().find(name);
    if (it == builtin_map().end())
        throw Error(ErrorKind::TemplateError, "unknown template '" + name + "'");
    return it->second;
}

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, text] : builtin_map()) out.push_back(name);
        return out;
    }();
    return names;
}

} // namespace apsf
