#include <fstream>
#include <sstream>

#include <boost/iostreams/copy.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filtering_stream.hpp>
#include <json.hpp>

#include "wikityper/errors.h"
#include "wikityper/log.h"
#include "wikityper/wiki_ingest.h"

namespace wikityper {
namespace {

namespace fs = std::filesystem;
namespace bio = boost::iostreams;
using json = nlohmann::json;

std::string page_key(Language lang, PageId page) {
  return std::string(to_string(lang)) + "/" + std::to_string(page);
}

void write_atomically(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

RevisionCache::RevisionCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  load_index();
}

RevisionCache::~RevisionCache() {
  try {
    flush();
  } catch (const std::exception& e) {
    log_warning(std::string("cache index flush failed: ") + e.what());
  }
}

fs::path RevisionCache::revision_path(Language lang, PageId page, RevisionId rev) const {
  return dir_ / std::string(to_string(lang)) / std::to_string(page) /
         (std::to_string(rev) + ".txt.gz");
}

void RevisionCache::load_index() {
  const fs::path index = dir_ / "index.json";
  if (!fs::exists(index)) return;
  std::ifstream in(index);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    log_warning("ignoring unreadable cache index " + index.string() + ": " + e.what());
    return;
  }
  const json pages = doc.value("pages", json::object());
  const json samples = doc.value("samples", json::object());
  for (const auto& [key, value] : pages.items()) {
    PageEntry entry;
    entry.title = value.value("title", "");
    entry.depth = value.value("depth", 0);
    entry.revisions = value.value("revisions", std::vector<RevisionId>{});
    pages_[key] = std::move(entry);
  }
  for (const auto& [lang, ids] : samples.items()) {
    samples_[lang] = ids.get<std::vector<PageId>>();
  }
}

void RevisionCache::flush() {
  std::lock_guard lock(mutex_);
  if (!dirty_) return;
  json pages = json::object();
  for (const auto& [key, entry] : pages_) {
    pages[key] = {{"title", entry.title}, {"depth", entry.depth}, {"revisions", entry.revisions}};
  }
  json samples = json::object();
  for (const auto& [lang, ids] : samples_) samples[lang] = ids;
  json doc = {{"version", 1}, {"pages", pages}, {"samples", samples}};
  write_atomically(dir_ / "index.json", doc.dump(1) + "\n");
  dirty_ = false;
}

std::optional<std::string> RevisionCache::load_revision(Language lang, PageId page,
                                                        RevisionId rev) const {
  const fs::path path = revision_path(lang, page, rev);
  std::ifstream file(path, std::ios::binary);
  if (!file) return std::nullopt;
  try {
    bio::filtering_istream in;
    in.push(bio::gzip_decompressor());
    in.push(file);
    std::ostringstream text;
    bio::copy(in, text);
    return text.str();
  } catch (const std::exception& e) {
    log_warning("corrupt cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void RevisionCache::store_revision(Language lang, PageId page, RevisionId rev,
                                   const std::string& text) {
  std::ostringstream compressed;
  {
    bio::filtering_ostream out;
    out.push(bio::gzip_compressor());
    out.push(compressed);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
  }
  write_atomically(revision_path(lang, page, rev), compressed.str());
}

std::optional<PageHistory> RevisionCache::load_page(Language lang, PageId page,
                                                    int depth) const {
  PageEntry entry;
  {
    std::lock_guard lock(mutex_);
    auto it = pages_.find(page_key(lang, page));
    if (it == pages_.end()) return std::nullopt;
    entry = it->second;
  }
  const bool exhausted = static_cast<int>(entry.revisions.size()) < entry.depth;
  if (entry.depth < depth && !exhausted) return std::nullopt;

  PageHistory history{page, entry.title, {}};
  const std::size_t keep = std::min<std::size_t>(entry.revisions.size(), depth);
  for (std::size_t i = entry.revisions.size() - keep; i < entry.revisions.size(); ++i) {
    auto text = load_revision(lang, page, entry.revisions[i]);
    if (!text) return std::nullopt;
    history.revisions.push_back({entry.revisions[i], std::move(*text)});
  }
  return history;
}

void RevisionCache::store_page(Language lang, const PageHistory& page, int depth) {
  for (const auto& rev : page.revisions) store_revision(lang, page.page_id, rev.id, rev.text);
  PageEntry entry{page.title, depth, {}};
  for (const auto& rev : page.revisions) entry.revisions.push_back(rev.id);
  std::lock_guard lock(mutex_);
  pages_[page_key(lang, page.page_id)] = std::move(entry);
  dirty_ = true;
}

std::vector<PageId> RevisionCache::sampled_pages(Language lang) const {
  std::lock_guard lock(mutex_);
  auto it = samples_.find(std::string(to_string(lang)));
  return it == samples_.end() ? std::vector<PageId>{} : it->second;
}

void RevisionCache::store_sampled_pages(Language lang, const std::vector<PageId>& pages) {
  std::lock_guard lock(mutex_);
  samples_[std::string(to_string(lang))] = pages;
  dirty_ = true;
}

}  // namespace wikityper
