#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>

#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filtering_stream.hpp>
#include <expat.h>

#include "wikityper/errors.h"
#include "wikityper/wiki_ingest.h"

namespace wikityper {
namespace {

namespace bio = boost::iostreams;

enum class Field { kNone, kTitle, kNamespace, kPageId, kRevisionId, kText };

struct DumpState {
  int depth_limit = 10;
  const std::function<void(PageHistory&&)>* on_page = nullptr;
  const std::function<void(const std::string&)>* on_parse_error = nullptr;

  std::vector<std::string> stack;
  Field field = Field::kNone;
  std::string buffer;

  bool in_page = false;
  bool page_bad = false;
  PageHistory page;
  std::string page_id_text;
  std::string ns_text;
  Revision revision;
  std::string revision_id_text;
  bool revision_has_id = false;

  void trim_revisions(std::size_t keep) {
    auto& revs = page.revisions;
    std::sort(revs.begin(), revs.end(),
              [](const Revision& a, const Revision& b) { return a.id < b.id; });
    if (revs.size() > keep) revs.erase(revs.begin(), revs.end() - static_cast<long>(keep));
  }
};

std::string_view local_name(const XML_Char* name) {
  std::string_view n(name);
  const auto colon = n.rfind(':');
  return colon == std::string_view::npos ? n : n.substr(colon + 1);
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\n')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\n')) text.remove_suffix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

void XMLCALL on_start(void* user, const XML_Char* raw_name, const XML_Char**) {
  auto& s = *static_cast<DumpState*>(user);
  const std::string_view name = local_name(raw_name);
  const std::string_view parent = s.stack.empty() ? std::string_view{} : s.stack.back();
  s.field = Field::kNone;
  if (name == "page") {
    s.in_page = true;
    s.page_bad = false;
    s.page = PageHistory{};
    s.page_id_text.clear();
    s.ns_text.clear();
  } else if (s.in_page && name == "revision") {
    s.revision = Revision{};
    s.revision_id_text.clear();
    s.revision_has_id = false;
  } else if (parent == "page" && name == "title") {
    s.field = Field::kTitle;
  } else if (parent == "page" && name == "ns") {
    s.field = Field::kNamespace;
  } else if (parent == "page" && name == "id") {
    s.field = Field::kPageId;
  } else if (parent == "revision" && name == "id") {
    s.field = Field::kRevisionId;
  } else if (parent == "revision" && name == "text") {
    s.field = Field::kText;
  }
  s.buffer.clear();
  s.stack.emplace_back(name);
}

void XMLCALL on_chars(void* user, const XML_Char* data, int len) {
  auto& s = *static_cast<DumpState*>(user);
  if (s.field != Field::kNone) s.buffer.append(data, static_cast<std::size_t>(len));
}

void XMLCALL on_end(void* user, const XML_Char* raw_name) {
  auto& s = *static_cast<DumpState*>(user);
  const std::string_view name = local_name(raw_name);
  switch (s.field) {
    case Field::kTitle: s.page.title = s.buffer; break;
    case Field::kNamespace: s.ns_text = s.buffer; break;
    case Field::kPageId: s.page_id_text = s.buffer; break;
    case Field::kRevisionId:
      s.revision_has_id = parse_int(s.buffer, s.revision.id);
      if (!s.revision_has_id) s.page_bad = true;
      break;
    case Field::kText: s.revision.text = s.buffer; break;
    case Field::kNone: break;
  }
  s.field = Field::kNone;
  s.buffer.clear();
  if (!s.stack.empty()) s.stack.pop_back();

  if (name == "revision" && s.in_page) {
    if (s.revision_has_id) {
      s.page.revisions.push_back(std::move(s.revision));
      const auto keep = static_cast<std::size_t>(s.depth_limit);
      if (s.page.revisions.size() > 2 * keep) s.trim_revisions(keep);
    }
  } else if (name == "page" && s.in_page) {
    s.in_page = false;
    int ns = 0;
    if (!s.ns_text.empty() && !parse_int(s.ns_text, ns)) s.page_bad = true;
    if (!parse_int(s.page_id_text, s.page.page_id)) s.page_bad = true;
    if (s.page_bad) {
      (*s.on_parse_error)("malformed page '" + s.page.title + "' in dump");
      return;
    }
    if (ns != 0) return;
    s.trim_revisions(static_cast<std::size_t>(s.depth_limit));
    (*s.on_page)(std::move(s.page));
  }
}

bool is_bzip2(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  std::array<char, 3> magic{};
  probe.read(magic.data(), magic.size());
  return probe.gcount() == 3 && magic[0] == 'B' && magic[1] == 'Z' && magic[2] == 'h';
}

}  // namespace

void read_dump(const std::filesystem::path& path, int depth,
               const std::function<void(PageHistory&&)>& on_page,
               const std::function<void(const std::string&)>& on_parse_error) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open dump " + path.string());
  const bool compressed = is_bzip2(path);

  bio::filtering_istream in;
  if (compressed) in.push(bio::bzip2_decompressor());
  in.push(file);

  DumpState state;
  state.depth_limit = std::max(depth, 1);
  state.on_page = &on_page;
  state.on_parse_error = &on_parse_error;

  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw Error("cannot allocate XML parser");
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_chars);

  std::vector<char> chunk(1 << 20);
  while (true) {
    try {
      in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    } catch (const std::exception& e) {
      on_parse_error(std::string("dump decompression failed: ") + e.what());
      return;
    }
    const auto got = static_cast<int>(in.gcount());
    const bool last = got == 0 || in.eof();
    if (XML_Parse(parser.get(), chunk.data(), got, last) == XML_STATUS_ERROR) {
      on_parse_error("XML error at line " +
                     std::to_string(XML_GetCurrentLineNumber(parser.get())) + ": " +
                     XML_ErrorString(XML_GetErrorCode(parser.get())));
      return;
    }
    if (last) break;
  }
}

}  // namespace wikityper
