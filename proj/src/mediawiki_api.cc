#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "wikityper/errors.h"
#include "wikityper/log.h"
#include "wikityper/wiki_ingest.h"

namespace wikityper {
namespace {

using json = nlohmann::json;

constexpr std::string_view kApiPath = "/w/api.php";
// Content-bearing revision queries are capped at 50 per request for
// non-bot clients.
constexpr int kMaxRevisionsPerRequest = 50;
constexpr int kMaxRandomPerRequest = 500;

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

// MediaWiki returns formatversion=2 arrays or legacy objects keyed by id.
std::vector<json> page_list(const json& doc) {
  if (!doc.contains("query") || !doc["query"].contains("pages")) return {};
  const json& pages = doc["query"]["pages"];
  std::vector<json> out;
  if (pages.is_array()) {
    out.assign(pages.begin(), pages.end());
  } else if (pages.is_object()) {
    for (const auto& [key, value] : pages.items()) out.push_back(value);
  } else {
    throw ValidationError("query.pages is neither array nor object");
  }
  return out;
}

json parse_payload(const std::string& body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ValidationError("API response is not a JSON object");
  }
  if (doc.contains("error")) {
    throw ValidationError("API error: " + doc["error"].value("info", doc["error"].dump()));
  }
  return doc;
}

std::optional<std::string> revision_content(const json& rev) {
  const json* holder = &rev;
  if (rev.contains("slots") && rev["slots"].contains("main")) holder = &rev["slots"]["main"];
  for (const char* field : {"content", "*"}) {
    if (holder->contains(field) && (*holder)[field].is_string()) {
      return (*holder)[field].get<std::string>();
    }
  }
  return std::nullopt;
}

}  // namespace

std::string resolve_api_base(const IngestConfig& cfg) {
  std::string base = cfg.api_base;
  if (base.empty()) {
    if (const char* env = std::getenv("WIKITYPER_API_BASE"); env != nullptr && *env != '\0') {
      base = env;
    } else {
      base = "https://{lang}.wikipedia.org";
    }
  }
  base = replace_all(base, "{lang}", to_string(cfg.language));
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base;
}

MediaWikiApi::MediaWikiApi(const IngestConfig& cfg, std::shared_ptr<RateLimiter> limiter,
                           std::atomic<std::int64_t>* request_counter)
    : cfg_(cfg),
      base_url_(resolve_api_base(cfg)),
      limiter_(std::move(limiter)),
      request_counter_(request_counter) {}

std::string MediaWikiApi::get(const std::string& path_and_query) {
  auto delay = cfg_.backoff_initial;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    if (limiter_) limiter_->acquire();
    if (request_counter_ != nullptr) ++*request_counter_;

    httplib::Client client(base_url_);
    client.set_connection_timeout(cfg_.request_timeout);
    client.set_read_timeout(cfg_.request_timeout);
    client.set_follow_location(true);
    httplib::Headers headers = {{"User-Agent", cfg_.user_agent},
                                {"Accept-Encoding", "identity"}};
    auto res = client.Get(path_and_query, headers);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    // Client errors other than throttling will not improve on retry.
    if (res->status >= 400 && res->status < 500 && res->status != 429) break;
  }
  throw NetworkError("GET " + base_url_ + path_and_query + " failed: " + last_error);
}

std::vector<PageId> MediaWikiApi::random_pages(int count) {
  const int limit = std::clamp(count, 1, kMaxRandomPerRequest);
  const std::string query = std::string(kApiPath) +
                            "?action=query&format=json&formatversion=2&generator=random"
                            "&grnnamespace=0&grnlimit=" +
                            std::to_string(limit);
  const json doc = parse_payload(get(query));
  std::vector<PageId> ids;
  for (const json& page : page_list(doc)) {
    if (!page.contains("pageid") || !page["pageid"].is_number_integer()) {
      throw ValidationError("random page entry without integer pageid");
    }
    ids.push_back(page["pageid"].get<PageId>());
  }
  return ids;
}

PageHistory MediaWikiApi::page_revisions(PageId page, int depth) {
  PageHistory history;
  history.page_id = page;
  std::string continuation;
  int remaining = depth;
  while (remaining > 0) {
    const int batch = std::min(remaining, kMaxRevisionsPerRequest);
    std::string query = std::string(kApiPath) +
                        "?action=query&format=json&formatversion=2&prop=revisions"
                        "&rvprop=ids%7Ccontent&rvslots=main&rvlimit=" +
                        std::to_string(batch) + "&pageids=" + std::to_string(page);
    if (!continuation.empty()) query += "&rvcontinue=" + httplib::detail::encode_url(continuation);
    const json doc = parse_payload(get(query));
    const auto pages = page_list(doc);
    if (pages.size() != 1) throw ValidationError("expected exactly one page in revisions reply");
    const json& p = pages.front();
    if (p.contains("missing") || p.contains("invalid")) return history;
    if (!p.contains("pageid") || p["pageid"].get<PageId>() != page) {
      throw ValidationError("revisions reply for a different page");
    }
    history.title = p.value("title", "");
    const json revs = p.value("revisions", json::array());
    if (!revs.is_array()) throw ValidationError("revisions field is not an array");
    for (const json& rev : revs) {
      if (!rev.contains("revid") || !rev["revid"].is_number_integer()) {
        throw ValidationError("revision without integer revid");
      }
      auto content = revision_content(rev);
      if (!content) continue;  // suppressed or hidden revision text
      history.revisions.push_back({rev["revid"].get<RevisionId>(), std::move(*content)});
    }
    remaining -= static_cast<int>(revs.size());
    if (revs.empty() || !doc.contains("continue") || !doc["continue"].contains("rvcontinue")) {
      break;
    }
    continuation = doc["continue"]["rvcontinue"].get<std::string>();
  }
  std::sort(history.revisions.begin(), history.revisions.end(),
            [](const Revision& a, const Revision& b) { return a.id < b.id; });
  return history;
}

}  // namespace wikityper
