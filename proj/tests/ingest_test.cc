#include <doctest.h>

#include <fstream>
#include <sstream>

#include <boost/iostreams/copy.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include "mock_wiki.h"
#include "wikityper/errors.h"
#include "wikityper/log.h"
#include "wikityper/wiki_ingest.h"

using namespace wikityper;

namespace {

const std::filesystem::path kDump = std::filesystem::path(WIKITYPER_FIXTURES) / "mining_dump.xml";

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("wikityper_ingest_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

IngestConfig api_config(const MockWiki& wiki) {
  IngestConfig cfg;
  cfg.api_base = wiki.base_url();
  cfg.rate_limit = 1000;
  cfg.page_budget = 25;
  cfg.revisions_per_page = 10;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.max_retries = 2;
  return cfg;
}

PageHistory history(int n) {
  PageHistory page{1, "P", {}};
  for (int i = 1; i <= n; ++i) page.revisions.push_back({i, "text " + std::to_string(i)});
  return page;
}

struct QuietLogs {
  LogLevel saved = log_level();
  QuietLogs() { set_log_level(LogLevel::kQuiet); }
  ~QuietLogs() { set_log_level(saved); }
};

}  // namespace

TEST_CASE("consecutive pairs") {
  auto pairs = consecutive_pairs(history(5), 3, Language::kEn);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].older_rev_id == 3);
  CHECK(pairs[0].newer_rev_id == 4);
  CHECK(pairs[1].newer_rev_id == 5);
  CHECK(consecutive_pairs(history(1), 10, Language::kEn).empty());
}

TEST_CASE("config validation") {
  IngestConfig cfg;
  cfg.page_budget = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.page_budget = 1;
  cfg.source = IngestSource::kDump;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("dump reader, plain and bz2") {
  std::vector<PageId> plain;
  read_dump(kDump, 10, [&](PageHistory&& p) { plain.push_back(p.page_id); }, [](const std::string&) {});
  CHECK(plain.size() == 25);
  CHECK(plain.front() == 101);

  const auto dir = scratch("bz2");
  {
    std::ifstream src(kDump, std::ios::binary);
    std::ofstream dst(dir / "dump.xml.bz2", std::ios::binary);
    boost::iostreams::filtering_ostream out;
    out.push(boost::iostreams::bzip2_compressor());
    out.push(dst);
    boost::iostreams::copy(src, out);
  }
  std::vector<PageId> compressed;
  read_dump(dir / "dump.xml.bz2", 10, [&](PageHistory&& p) { compressed.push_back(p.page_id); },
            [](const std::string&) {});
  CHECK(compressed == plain);
  CHECK_THROWS_AS(read_dump(dir / "missing.xml", 1, [](PageHistory&&) {}, [](const std::string&) {}),
                  IoError);
}

TEST_CASE("dump reader reports a bad page id and keeps going") {
  const auto dir = scratch("badid");
  std::ofstream(dir / "d.xml") << "<mediawiki><page><title>A</title><ns>0</ns><id>x1</id>"
                                  "<revision><id>1</id><text>a</text></revision></page>"
                                  "<page><title>B</title><ns>0</ns><id>2</id>"
                                  "<revision><id>3</id><text>b</text></revision></page>"
                                  "<page><title>T:C</title><ns>10</ns><id>4</id>"
                                  "<revision><id>5</id><text>c</text></revision></page></mediawiki>";
  std::vector<PageId> ids;
  int errors = 0;
  read_dump(dir / "d.xml", 5, [&](PageHistory&& p) { ids.push_back(p.page_id); },
            [&](const std::string&) { ++errors; });
  CHECK(ids == std::vector<PageId>{2});
  CHECK(errors == 1);
}

TEST_CASE("revision cache round trip") {
  const auto dir = scratch("cache");
  PageHistory page = history(3);
  page.title = "Über";
  {
    RevisionCache cache(dir);
    cache.store_page(Language::kDe, page, 10);
    cache.store_sampled_pages(Language::kDe, {1, 7});
    cache.flush();
  }
  RevisionCache cache(dir);
  const auto back = cache.load_page(Language::kDe, 1, 10);
  REQUIRE(back.has_value());
  CHECK(back->title == "Über");
  REQUIRE(back->revisions.size() == 3);
  CHECK(back->revisions[2].text == "text 3");
  CHECK(cache.sampled_pages(Language::kDe) == std::vector<PageId>{1, 7});
  CHECK_FALSE(cache.load_page(Language::kEn, 1, 10).has_value());
  CHECK(cache.load_revision(Language::kDe, 1, 2) == std::optional<std::string>("text 2"));
}

TEST_CASE("API source pages through revisions and matches the dump") {
  QuietLogs quiet;
  MockWiki wiki(kDump);
  auto api = api_config(wiki);
  api.revisions_per_page = 2;
  api.page_ids = {103, 101, 106};
  IngestConfig dump = api;
  dump.source = IngestSource::kDump;
  dump.dump_path = kDump;
  const auto from_api = collect_revision_pairs(api);
  const auto from_dump = collect_revision_pairs(dump);
  CHECK(from_api.size() == 3);
  CHECK(from_api == from_dump);
}

TEST_CASE("API retries transient failures") {
  QuietLogs quiet;
  MockWiki wiki(kDump);
  auto cfg = api_config(wiki);
  cfg.page_ids = {101};
  wiki.fail_next(2, 503);
  IngestSummary summary;
  const auto pairs = collect_revision_pairs(cfg, &summary);
  CHECK(pairs.size() == 2);  // page 101 has three revisions
  CHECK(summary.network_failures == 0);
  CHECK(wiki.requests() == 3);
}

TEST_CASE("API gives up on a page after the retry limit") {
  QuietLogs quiet;
  MockWiki wiki(kDump);
  auto cfg = api_config(wiki);
  cfg.page_ids = {101, 102};
  wiki.fail_next(3, 500);
  IngestSummary summary;
  const auto pairs = collect_revision_pairs(cfg, &summary);
  CHECK(summary.network_failures == 1);
  CHECK(summary.pages_skipped == 1);
  CHECK(summary.pages_processed == 1);
  CHECK(pairs.size() == 1);
}

TEST_CASE("malformed payloads are counted as parse errors") {
  QuietLogs quiet;
  MockWiki wiki(kDump);
  wiki.corrupt_page(102);
  auto cfg = api_config(wiki);
  cfg.page_ids = {101, 102, 999};
  IngestSummary summary;
  collect_revision_pairs(cfg, &summary);
  CHECK(summary.parse_errors == 1);
  CHECK(summary.pages_skipped == 1);
  CHECK(summary.pages_processed == 2);  // a missing page has no revisions
}

TEST_CASE("random sampling through the API and a warm cache") {
  QuietLogs quiet;
  MockWiki wiki(kDump);
  auto cfg = api_config(wiki);
  cfg.page_budget = 5;
  cfg.cache_dir = scratch("warm");
  cfg.workers = 3;
  const auto cold = collect_revision_pairs(cfg);
  const auto before = wiki.requests();
  CHECK(before > 0);
  IngestSummary summary;
  const auto warm = collect_revision_pairs(cfg, &summary);
  CHECK(warm == cold);
  CHECK(wiki.requests() == before);
  CHECK(summary.network_requests == 0);
  CHECK(summary.cache_hits == 5);
}

TEST_CASE("unreachable API is a network error") {
  QuietLogs quiet;
  IngestConfig cfg;
  cfg.api_base = "http://127.0.0.1:1";
  cfg.max_retries = 0;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  CHECK_THROWS_AS(collect_revision_pairs(cfg), NetworkError);
}
