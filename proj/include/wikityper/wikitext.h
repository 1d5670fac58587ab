#pragma once

#include <string>
#include <string_view>

namespace wikityper {

// Reduces wikitext/HTML to plain text: templates, tables, comments, <ref>
// bodies and media/category links are dropped; [[target|label]] keeps the
// label; external links keep their label; tags, bold/italic quotes, heading
// and list markers are removed. Unbalanced constructs pass through untouched.
// The result is a fixed point: strip_markup(strip_markup(x)) == strip_markup(x).
std::string strip_markup(std::string_view raw);

}  // namespace wikityper
