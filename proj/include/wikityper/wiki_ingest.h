#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wikityper/textcore.h"

namespace wikityper {

using PageId = std::int64_t;
using RevisionId = std::int64_t;

// Two consecutive stored versions of one page, markup already stripped.
struct RevisionPair {
  PageId page_id = 0;
  std::string page_title;
  RevisionId older_rev_id = 0;
  RevisionId newer_rev_id = 0;
  std::string older_text;
  std::string newer_text;
  Language language = Language::kEn;

  bool operator==(const RevisionPair&) const = default;
};

struct Revision {
  RevisionId id = 0;
  std::string text;  // raw wikitext
};

// The most recent revisions of one page, ascending by id.
struct PageHistory {
  PageId page_id = 0;
  std::string title;
  std::vector<Revision> revisions;
};

enum class IngestSource { kApi, kDump };

struct IngestConfig {
  Language language = Language::kEn;
  std::int64_t page_budget = 1;
  int revisions_per_page = 10;
  IngestSource source = IngestSource::kApi;
  std::filesystem::path dump_path;
  std::filesystem::path cache_dir;  // empty disables the cache
  double rate_limit = 5.0;          // requests per second, API only
  int workers = 1;
  std::uint64_t seed = 0;            // reservoir sampling over dump pages
  std::vector<PageId> page_ids;      // explicit page set; bypasses sampling
  std::string api_base;              // "" -> WIKITYPER_API_BASE or https://{lang}.wikipedia.org
  std::string user_agent = "wikityper/0.1.0 (Wikipedia typo mining toolkit)";
  int max_retries = 4;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::seconds request_timeout{30};

  // Throws ValidationError on a broken precondition.
  void validate() const;
};

struct IngestSummary {
  std::int64_t pages_requested = 0;
  std::int64_t pages_processed = 0;
  std::int64_t pages_skipped = 0;
  std::int64_t parse_errors = 0;
  std::int64_t network_failures = 0;
  std::int64_t network_requests = 0;
  std::int64_t cache_hits = 0;
  std::int64_t pairs_emitted = 0;
};

// Consecutive pairs over the last `depth` revisions (k revisions -> k-1 pairs),
// texts passed through strip_markup.
std::vector<RevisionPair> consecutive_pairs(const PageHistory& page, int depth,
                                            Language language);

// Shared token bucket with a burst of one request.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_slot_;
};

// On-disk cache: <dir>/<lang>/<page>/<rev>.txt.gz plus <dir>/index.json
// recording page titles, fetched revision ids and sampled page lists.
class RevisionCache {
 public:
  explicit RevisionCache(std::filesystem::path dir);
  ~RevisionCache();
  RevisionCache(const RevisionCache&) = delete;
  RevisionCache& operator=(const RevisionCache&) = delete;

  std::optional<std::string> load_revision(Language lang, PageId page, RevisionId rev) const;
  void store_revision(Language lang, PageId page, RevisionId rev, const std::string& text);

  // A cached page satisfies a request for `depth` revisions if it was fetched
  // at least that deep, or the page has fewer revisions than were asked for.
  std::optional<PageHistory> load_page(Language lang, PageId page, int depth) const;
  void store_page(Language lang, const PageHistory& page, int depth);

  std::vector<PageId> sampled_pages(Language lang) const;
  void store_sampled_pages(Language lang, const std::vector<PageId>& pages);

  void flush();

 private:
  struct PageEntry {
    std::string title;
    int depth = 0;
    std::vector<RevisionId> revisions;
  };

  std::filesystem::path revision_path(Language lang, PageId page, RevisionId rev) const;
  void load_index();

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, PageEntry> pages_;
  std::map<std::string, std::vector<PageId>> samples_;
  bool dirty_ = false;
};

class MediaWikiApi {
 public:
  MediaWikiApi(const IngestConfig& cfg, std::shared_ptr<RateLimiter> limiter,
               std::atomic<std::int64_t>* request_counter);

  std::string base_url() const { return base_url_; }

  // Throws NetworkError after exhausting retries, ValidationError on a
  // malformed payload.
  std::vector<PageId> random_pages(int count);
  PageHistory page_revisions(PageId page, int depth);

 private:
  std::string get(const std::string& path_and_query);

  const IngestConfig& cfg_;
  std::string base_url_;
  std::shared_ptr<RateLimiter> limiter_;
  std::atomic<std::int64_t>* request_counter_;
};

std::string resolve_api_base(const IngestConfig& cfg);

// Streams <page> elements of a MediaWiki XML export (optionally bz2).
// For every main-namespace page the callback receives the last `depth`
// revisions. A page with a malformed id is reported through on_parse_error.
void read_dump(const std::filesystem::path& path, int depth,
               const std::function<void(PageHistory&&)>& on_page,
               const std::function<void(const std::string&)>& on_parse_error);

// Yields consecutive-revision pairs for up to cfg.page_budget pages.
// Pairs arrive grouped by page in page-list order, ascending within a page.
void fetch_random_pages(const IngestConfig& cfg,
                        const std::function<void(RevisionPair&&)>& sink,
                        IngestSummary* summary = nullptr);

std::vector<RevisionPair> collect_revision_pairs(const IngestConfig& cfg,
                                                 IngestSummary* summary = nullptr);

}  // namespace wikityper
