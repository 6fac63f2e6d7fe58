#pragma once

#include <map>
#include <string>
#include <vector>

namespace apsf {

// Fills {name} slots in a single pass; substituted values are never
// re-scanned. A slot with no binding is an error so typos surface
// immediately; brace runs that are not identifier-shaped pass through.
std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& values);

// Built-in template text by name, or the content of <name>.txt inside
// templates_dir when that override file exists.
std::string load_template(const std::string& name, const std::string& templates_dir = "");

const std::vector<std::string>& template_names();

} // namespace apsf
