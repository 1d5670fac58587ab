#include "wikityper/wiki_ingest.h"

#include <algorithm>
#include <condition_variable>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "wikityper/errors.h"
#include "wikityper/log.h"
#include "wikityper/rng.h"
#include "wikityper/wikitext.h"

namespace wikityper {
namespace {

// Random-page requests that return nothing new before sampling gives up.
constexpr int kMaxStaleSampleRounds = 10;
constexpr std::int64_t kIndexFlushEvery = 50;

std::vector<PageId> dedupe(const std::vector<PageId>& ids, std::int64_t budget) {
  std::vector<PageId> out;
  std::unordered_set<PageId> seen;
  for (PageId id : ids) {
    if (static_cast<std::int64_t>(out.size()) >= budget) break;
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

void emit_page(const PageHistory& page, const IngestConfig& cfg,
               const std::function<void(RevisionPair&&)>& sink, IngestSummary& summary) {
  for (auto& pair : consecutive_pairs(page, cfg.revisions_per_page, cfg.language)) {
    ++summary.pairs_emitted;
    sink(std::move(pair));
  }
  ++summary.pages_processed;
}

void ingest_from_dump(const IngestConfig& cfg,
                      const std::function<void(RevisionPair&&)>& sink,
                      IngestSummary& summary) {
  auto on_error = [&](const std::string& message) {
    ++summary.parse_errors;
    log_warning(message);
  };

  if (!cfg.page_ids.empty()) {
    const std::vector<PageId> wanted = dedupe(cfg.page_ids, cfg.page_budget);
    std::unordered_set<PageId> wanted_set(wanted.begin(), wanted.end());
    std::unordered_map<PageId, PageHistory> found;
    read_dump(cfg.dump_path, cfg.revisions_per_page,
              [&](PageHistory&& page) {
                if (wanted_set.count(page.page_id) && !found.count(page.page_id)) {
                  found.emplace(page.page_id, std::move(page));
                }
              },
              on_error);
    summary.pages_requested = static_cast<std::int64_t>(wanted.size());
    for (PageId id : wanted) {
      auto it = found.find(id);
      if (it == found.end()) {
        ++summary.pages_skipped;
        log_warning("page " + std::to_string(id) + " not found in dump");
        continue;
      }
      emit_page(it->second, cfg, sink, summary);
    }
    return;
  }

  // Reservoir sample of page_budget pages, emitted in dump order.
  Rng rng(cfg.seed);
  std::vector<std::pair<std::int64_t, PageHistory>> reservoir;
  std::int64_t seen = 0;
  read_dump(cfg.dump_path, cfg.revisions_per_page,
            [&](PageHistory&& page) {
              if (seen < cfg.page_budget) {
                reservoir.emplace_back(seen, std::move(page));
              } else {
                const auto slot = rng.below(static_cast<std::uint64_t>(seen + 1));
                if (slot < static_cast<std::uint64_t>(cfg.page_budget)) {
                  reservoir[slot] = {seen, std::move(page)};
                }
              }
              ++seen;
            },
            on_error);
  std::sort(reservoir.begin(), reservoir.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  summary.pages_requested = static_cast<std::int64_t>(reservoir.size());
  for (const auto& [index, page] : reservoir) emit_page(page, cfg, sink, summary);
}

std::vector<PageId> sample_api_pages(const IngestConfig& cfg, MediaWikiApi& api,
                                     RevisionCache* cache) {
  std::vector<PageId> pages = cache ? cache->sampled_pages(cfg.language) : std::vector<PageId>{};
  if (static_cast<std::int64_t>(pages.size()) >= cfg.page_budget) {
    pages.resize(static_cast<std::size_t>(cfg.page_budget));
    return pages;
  }
  std::unordered_set<PageId> seen(pages.begin(), pages.end());
  int stale_rounds = 0;
  while (static_cast<std::int64_t>(pages.size()) < cfg.page_budget &&
         stale_rounds < kMaxStaleSampleRounds) {
    const auto missing = cfg.page_budget - static_cast<std::int64_t>(pages.size());
    const auto batch = api.random_pages(static_cast<int>(std::min<std::int64_t>(missing, 500)));
    bool grew = false;
    for (PageId id : batch) {
      if (static_cast<std::int64_t>(pages.size()) >= cfg.page_budget) break;
      if (seen.insert(id).second) {
        pages.push_back(id);
        grew = true;
      }
    }
    stale_rounds = grew ? 0 : stale_rounds + 1;
  }
  if (cache) {
    cache->store_sampled_pages(cfg.language, pages);
    cache->flush();
  }
  return pages;
}

// One page's outcome, filled by a worker and consumed in page-list order.
struct PageSlot {
  bool done = false;
  std::optional<PageHistory> page;
  bool parse_error = false;
  bool network_failure = false;
  bool cache_hit = false;
};

void ingest_from_api(const IngestConfig& cfg, const std::function<void(RevisionPair&&)>& sink,
                     IngestSummary& summary) {
  std::unique_ptr<RevisionCache> cache;
  if (!cfg.cache_dir.empty()) cache = std::make_unique<RevisionCache>(cfg.cache_dir);
  std::atomic<std::int64_t> requests{0};
  auto limiter = std::make_shared<RateLimiter>(cfg.rate_limit);
  MediaWikiApi api(cfg, limiter, &requests);

  std::vector<PageId> pages;
  try {
    pages = cfg.page_ids.empty() ? sample_api_pages(cfg, api, cache.get())
                                 : dedupe(cfg.page_ids, cfg.page_budget);
  } catch (...) {
    summary.network_requests = requests;
    throw;
  }
  summary.pages_requested = static_cast<std::int64_t>(pages.size());

  std::vector<PageSlot> slots(pages.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<std::int64_t> stored{0};

  auto worker = [&] {
    MediaWikiApi local_api(cfg, limiter, &requests);
    for (std::size_t i = next++; i < pages.size(); i = next++) {
      PageSlot slot;
      if (cache) {
        if (auto hit = cache->load_page(cfg.language, pages[i], cfg.revisions_per_page)) {
          slot.page = std::move(hit);
          slot.cache_hit = true;
        }
      }
      if (!slot.page) {
        try {
          PageHistory page = local_api.page_revisions(pages[i], cfg.revisions_per_page);
          if (cache) {
            cache->store_page(cfg.language, page, cfg.revisions_per_page);
            if (++stored % kIndexFlushEvery == 0) cache->flush();
          }
          slot.page = std::move(page);
        } catch (const NetworkError& e) {
          slot.network_failure = true;
          log_warning("skipping page " + std::to_string(pages[i]) + ": " + e.what());
        } catch (const ValidationError& e) {
          slot.parse_error = true;
          log_warning("malformed reply for page " + std::to_string(pages[i]) + ": " + e.what());
        } catch (const std::exception& e) {
          slot.parse_error = true;
          log_warning("malformed reply for page " + std::to_string(pages[i]) + ": " + e.what());
        }
      }
      slot.done = true;
      {
        std::lock_guard lock(mutex);
        slots[i] = std::move(slot);
      }
      ready.notify_all();
    }
  };

  const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(pages.size())));
  std::vector<std::thread> threads;
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);

  try {
    for (std::size_t i = 0; i < pages.size(); ++i) {
      PageSlot slot;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return slots[i].done; });
        slot = std::move(slots[i]);
      }
      if (slot.cache_hit) ++summary.cache_hits;
      if (slot.parse_error) ++summary.parse_errors;
      if (slot.network_failure) ++summary.network_failures;
      if (!slot.page) {
        ++summary.pages_skipped;
        continue;
      }
      emit_page(*slot.page, cfg, sink, summary);
    }
  } catch (...) {
    next = pages.size();
    for (auto& t : threads) t.join();
    throw;
  }
  for (auto& t : threads) t.join();
  if (cache) cache->flush();
  summary.network_requests = requests;
}

}  // namespace

void IngestConfig::validate() const {
  if (page_budget < 1) throw ValidationError("page budget must be >= 1");
  if (revisions_per_page < 1) throw ValidationError("revisions per page must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (source == IngestSource::kApi && !(rate_limit > 0)) {
    throw ValidationError("rate limit must be > 0 requests/second for the API source");
  }
  if (source == IngestSource::kDump && dump_path.empty()) {
    throw ValidationError("dump source requires a dump path");
  }
  if (max_retries < 0) throw ValidationError("max retries must be >= 0");
}

std::vector<RevisionPair> consecutive_pairs(const PageHistory& page, int depth,
                                            Language language) {
  std::vector<const Revision*> revs;
  for (const auto& r : page.revisions) revs.push_back(&r);
  std::sort(revs.begin(), revs.end(),
            [](const Revision* a, const Revision* b) { return a->id < b->id; });
  revs.erase(std::unique(revs.begin(), revs.end(),
                         [](const Revision* a, const Revision* b) { return a->id == b->id; }),
             revs.end());
  if (static_cast<int>(revs.size()) > depth) {
    revs.erase(revs.begin(), revs.end() - depth);
  }
  std::vector<RevisionPair> pairs;
  if (revs.size() < 2) return pairs;
  std::string older = strip_markup(revs.front()->text);
  for (std::size_t i = 1; i < revs.size(); ++i) {
    std::string newer = strip_markup(revs[i]->text);
    pairs.push_back({page.page_id, page.title, revs[i - 1]->id, revs[i]->id, older, newer,
                     language});
    older = std::move(newer);
  }
  return pairs;
}

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(per_second > 0 ? 1.0 / per_second : 0.0))),
      next_slot_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

void fetch_random_pages(const IngestConfig& cfg,
                        const std::function<void(RevisionPair&&)>& sink,
                        IngestSummary* summary) {
  cfg.validate();
  IngestSummary local;
  try {
    if (cfg.source == IngestSource::kDump) {
      ingest_from_dump(cfg, sink, local);
    } else {
      ingest_from_api(cfg, sink, local);
    }
  } catch (...) {
    if (summary) *summary = local;
    throw;
  }
  if (summary) *summary = local;
}

std::vector<RevisionPair> collect_revision_pairs(const IngestConfig& cfg,
                                                 IngestSummary* summary) {
  std::vector<RevisionPair> pairs;
  fetch_random_pages(cfg, [&](RevisionPair&& p) { pairs.push_back(std::move(p)); }, summary);
  return pairs;
}

}  // namespace wikityper
