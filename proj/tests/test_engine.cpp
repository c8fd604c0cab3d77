/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <atomic>
#include <bit>
#include <filesystem>
#include <mutex>
#include <set>

#include "skimflow/engine.hpp"
#include "skimflow/error.hpp"
#include "skimflow/generator.hpp"
#include "skimflow/ntu_file.hpp"
#include "support.hpp"

using namespace skimflow;
using skimflow::testing::TempDir;

namespace {

Errc code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::ParseError;
}

std::vector<BlockInfo> blocks_of(std::initializer_list<std::uint32_t> payloads) {
  std::vector<BlockInfo> out;
  std::uint64_t off = 0;
  for (auto p : payloads) {
    out.push_back({off, 10, p - 12});
    off += p;
  }
  return out;
}

DatasetDescriptor mc(const std::string &glob) { return {glob, DatasetKind::Mc, 1.0, "mc"}; }

/// 10,000 signed-weight events in one file of 40 blocks.
struct Corpus {
  TempDir dir;
  std::vector<std::string> paths;
  std::vector<Event> events;

  Corpus() {
    GeneratorSpec spec;
    spec.seed = 42;
    spec.events = 10000;
    spec.weight_mode = GeneratorSpec::WeightMode::Signed;
    spec.weight = 1.3;
    generate(spec, dir.file("c.evt"), {false, 250});
    paths = {dir.file("c.evt")};
    events = generate_events(spec);
  }
};

const Corpus &corpus() {
  static const Corpus c;
  return c;
}

}  // namespace

TEST_CASE("planner: greedy auto mode") {
  const std::vector<FileBlocks> files{{"a", blocks_of({60, 60, 60})}};
  const auto parts = plan_partitions(files, PartitionConfig::automatic(100));
  REQUIRE(parts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(parts[i].first_block == i);
    CHECK(parts[i].end_block == i + 1);
  }
  const auto whole = plan_partitions(files, PartitionConfig::automatic(1000));
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].end_block == 3);
  CHECK(whole[0].events == 30);
  CHECK(whole[0].stored_bytes == 180);
  const auto pairs = plan_partitions(files, PartitionConfig::automatic(120));
  CHECK(pairs.size() == 2);
}

TEST_CASE("planner: never spans files, oversized block gets its own partition") {
  const std::vector<FileBlocks> files{{"a", blocks_of({10, 500, 10})}, {"b", blocks_of({10})}, {"c", {}}};
  const auto parts = plan_partitions(files, PartitionConfig::automatic(100));
  REQUIRE(parts.size() == 4);
  CHECK(parts[1].first_block == 1);
  CHECK(parts[1].end_block == 2);
  CHECK(parts[3].file_index == 1);
  CHECK(code_of([] { plan_partitions({}, {}); }) == Errc::NoFilesMatched);
}

TEST_CASE("planner: custom modes") {
  std::vector<FileBlocks> files;
  for (const char *name : {"/d/a.evt", "/d/b.evt", "/d/c.evt"}) {
    files.push_back({name, blocks_of({20, 20, 20, 20, 20, 20, 20, 20, 20, 20})});
  }
  const auto six = plan_partitions(files, PartitionConfig::split_per_file(2));
  REQUIRE(six.size() == 6);
  for (const auto &p : six) CHECK(p.end_block - p.first_block == 5);

  std::vector<CustomRange> ranges;
  for (const char *name : {"a.evt", "b.evt", "/d/c.evt"}) {
    ranges.push_back({name, 0, 4});
    ranges.push_back({name, 4, 10});
  }
  CHECK(plan_partitions(files, PartitionConfig::explicit_ranges(ranges)).size() == 6);

  auto gap = ranges;
  gap[1].begin = 5;
  CHECK(code_of([&] { plan_partitions(files, PartitionConfig::explicit_ranges(gap)); }) ==
        Errc::InvalidCustomPlan);
  auto overlap = ranges;
  overlap[1].begin = 3;
  CHECK(code_of([&] { plan_partitions(files, PartitionConfig::explicit_ranges(overlap)); }) ==
        Errc::InvalidCustomPlan);
  auto missing_file = ranges;
  missing_file.resize(4);
  CHECK(code_of([&] { plan_partitions(files, PartitionConfig::explicit_ranges(missing_file)); }) ==
        Errc::InvalidCustomPlan);
  auto unknown = ranges;
  unknown[0].file = "z.evt";
  CHECK(code_of([&] { plan_partitions(files, PartitionConfig::explicit_ranges(unknown)); }) ==
        Errc::InvalidCustomPlan);
}

TEST_CASE("open: glob expansion and partition coverage") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 3000;
  const auto paths = generate_corpus(spec, dir.file("set"), 3, {false, 100});
  auto ds = PartitionedDataset::open(mc(dir.file("set_*.evt")));
  CHECK(ds.files().size() == 3);
  CHECK(ds.files()[0].path < ds.files()[1].path);
  CHECK(ds.partitions().size() == 3);
  CHECK(ds.total_events() == 3000);

  auto one = PartitionedDataset::open(mc(dir.file("set_001.evt")));
  CHECK(one.partitions().size() == 1);

  CHECK(code_of([&] { PartitionedDataset::open(mc(dir.file("none_*.evt"))); }) == Errc::NoFilesMatched);

  auto fine = PartitionedDataset::open(mc(dir.file("set_*.evt")), PartitionConfig::automatic(1));
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::uint64_t events = 0;
  for (const auto &p : fine.partitions()) {
    for (auto b = p.first_block; b < p.end_block; ++b) CHECK(seen.insert({p.file_index, b}).second);
    events += p.events;
  }
  CHECK(seen.size() == 30);
  CHECK(events == 3000);
}

TEST_CASE("map_reduce: trivial examples") {
  TempDir dir;
  write_evt(dir.file("empty.evt"), {}, event_schema());
  auto empty = PartitionedDataset::open(mc(dir.file("empty.evt")));
  CHECK(map_reduce(empty, {4}, [](const Event &e) { return e.gen_weight; }, Reducer::sum()) == 0.0);

  std::vector<Event> three(3);
  three[0].gen_weight = 1.0;
  three[1].gen_weight = -1.0;
  three[2].gen_weight = 2.5;
  write_evt(dir.file("three.evt"), three, event_schema());
  auto ds = PartitionedDataset::open(mc(dir.file("three.evt")));
  CHECK(map_reduce(ds, {1}, [](const Event &e) { return e.gen_weight; }, Reducer::sum()) == 2.5);
  CHECK(map_reduce(ds, {2}, [](const Event &e) { return e.gen_weight; }, Reducer::max()) == 2.5);
  CHECK(map_reduce(ds, {2}, [](const Event &e) { return e.gen_weight; }, Reducer::min()) == -1.0);
}

TEST_CASE("map_reduce: bit-identical across workers, close across partitionings") {
  const auto &c = corpus();
  std::vector<double> w;
  for (const auto &e : c.events) w.push_back(e.gen_weight);
  const double oracle = skimflow::testing::oracle_kahan_sum(w);
  for (std::size_t parts : {1, 4, 13}) {
    auto ds = PartitionedDataset::open(mc(c.paths[0]), PartitionConfig::split_per_file(parts));
    REQUIRE(ds.partitions().size() == parts);
    std::optional<std::uint64_t> bits;
    for (std::size_t workers : {1, 2, 7, 16}) {
      TraversalStats stats;
      const double sum =
          map_reduce(ds, {workers}, [](const Event &e) { return e.gen_weight; }, Reducer::sum(), &stats);
      CHECK(stats.events == 10000);
      CHECK(stats.partitions == parts);
      if (!bits) bits = std::bit_cast<std::uint64_t>(sum);
      CHECK(std::bit_cast<std::uint64_t>(sum) == *bits);
      CHECK(skimflow::testing::close_rel(sum, oracle));
    }
  }
}

TEST_CASE("tree_combine merges in ascending pairs") {
  const auto r = Reducer::custom(0.0, [](double a, double b) { return a * 10.0 + b; });
  // ((1,2),(3,4)) -> (12, 34) -> 154
  CHECK(tree_combine({1, 2, 3, 4}, r) == 154.0);
  // ((1,2),3) -> (12, 3) -> 123
  CHECK(tree_combine({1, 2, 3}, r) == 123.0);
  CHECK(tree_combine({}, Reducer::sum()) == 0.0);
}

TEST_CASE("traverse: coverage and in-partition order") {
  const auto &c = corpus();
  auto ds = PartitionedDataset::open(mc(c.paths[0]), PartitionConfig::split_per_file(13));
  std::mutex m;
  std::vector<std::vector<std::int64_t>> seen(ds.partitions().size());
  traverse(ds, {7}, [&](std::size_t p, std::span<const Event> events) {
    std::lock_guard lock(m);
    for (const auto &e : events) seen[p].push_back(e.event);
  });
  std::vector<std::int64_t> flat;
  for (const auto &s : seen) flat.insert(flat.end(), s.begin(), s.end());
  REQUIRE(flat.size() == c.events.size());
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == c.events[i].event);
}

TEST_CASE("cache: persisted traversals read nothing and agree") {
  const auto &c = corpus();
  auto ds = PartitionedDataset::open(mc(c.paths[0]), PartitionConfig::split_per_file(4));
  auto weight = [](const Event &e) { return e.gen_weight; };
  TraversalStats cold;
  const double a = map_reduce(ds, {2}, weight, Reducer::sum(), &cold);
  CHECK(cold.io.storage_bytes > 0);
  CHECK(ds.cache_state() == PartitionedDataset::CacheState::Cold);

  ds.persist();
  TraversalStats first;
  const double b = map_reduce(ds, {2}, weight, Reducer::sum(), &first);
  CHECK(first.io.storage_bytes > 0);
  CHECK(ds.cache_state() == PartitionedDataset::CacheState::Cached);
  CHECK(ds.cached_bytes() > 0);

  TraversalStats second;
  const double d = map_reduce(ds, {3}, weight, Reducer::sum(), &second);
  CHECK(second.io.storage_bytes == 0);
  CHECK(second.cache_hits == 4);
  CHECK(second.phases.read == 0.0);
  CHECK(second.phases.decode == 0.0);
  CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b));
  CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(d));

  ds.unpersist();
  TraversalStats after;
  map_reduce(ds, {1}, weight, Reducer::sum(), &after);
  CHECK(after.io.storage_bytes > 0);
}

TEST_CASE("cache: exceeded budget falls back to cold with a warning") {
  const auto &c = corpus();
  auto ds = PartitionedDataset::open(mc(c.paths[0]), PartitionConfig::split_per_file(4), 1);
  ds.persist();
  auto weight = [](const Event &e) { return e.gen_weight; };
  const double a = map_reduce(ds, {2}, weight, Reducer::sum());
  CHECK(ds.cache_state() == PartitionedDataset::CacheState::Cold);
  REQUIRE(ds.warnings().size() == 1);
  CHECK(ds.warnings()[0].code == Errc::CacheMemoryExceeded);
  TraversalStats again;
  const double b = map_reduce(ds, {2}, weight, Reducer::sum(), &again);
  CHECK(again.io.storage_bytes > 0);
  CHECK(a == b);
}

TEST_CASE("filter_map_write: examples and ordering") {
  const auto &c = corpus();
  TempDir dir;
  auto ds = PartitionedDataset::open(mc(c.paths[0]), PartitionConfig::split_per_file(13));
  const auto proj = typecheck(Projection{{"event", Expr::parse("event")}, {"met_pt", Expr::parse("met.pt")}},
                              event_schema());
  const FlatSchema cols = proj.columns();

  {
    NtuWriter sink(dir.file("all.ntu"), cols);
    const auto n = filter_map_write(ds, {7}, typecheck_cut(Expr::parse("true"), event_schema()), proj, {}, sink);
    CHECK(n == 10000);
    const auto back = read_ntu(dir.file("all.ntu"), {"event"});
    bool ordered = true;
    for (std::size_t i = 0; i < c.events.size(); ++i) {
      ordered = ordered && scalar_at(back.column("event"), i) == Scalar::i64(c.events[i].event);
    }
    CHECK(ordered);
  }
  {
    NtuWriter sink(dir.file("none.ntu"), cols);
    CHECK(filter_map_write(ds, {2}, typecheck_cut(Expr::parse("false"), event_schema()), proj, {}, sink) == 0);
    CHECK(NtuReader(dir.file("none.ntu")).rows() == 0);
  }
  std::string digest;
  for (std::size_t workers : {1, 2, 7, 16}) {
    NtuWriter sink(dir.file("w.ntu"), cols);
    TraversalStats stats;
    filter_map_write(ds, {workers}, typecheck_cut(Expr::parse("met.pt > 100"), event_schema()), proj,
                     [](NtupleRow &row) { row[1] = Scalar::f64(row[1].as_double() * 2.0); }, sink, &stats);
    CHECK(stats.phases.write > 0.0);
    const auto d = skimflow::testing::sha_like_digest(dir.file("w.ntu"));
    if (digest.empty()) digest = d;
    CHECK(d == digest);
  }
}

TEST_CASE("errors name the failing partition and leave no partial output") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 2000;
  generate(spec, dir.file("c.evt"), {false, 200});
  auto bytes = skimflow::testing::read_bytes(dir.file("c.evt"));
  EvtReader r(dir.file("c.evt"));
  const auto b = r.blocks()[6];
  bytes[b.offset + 8 + 40] ^= 0x01;
  skimflow::testing::write_bytes(dir.file("c.evt"), bytes);
  auto ds = PartitionedDataset::open(mc(dir.file("c.evt")), PartitionConfig::split_per_file(5));
  try {
    map_reduce(ds, {3}, [](const Event &e) { return e.gen_weight; }, Reducer::sum());
    FAIL("corruption not reported");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::CrcMismatch);
    CHECK(std::string(e.what()).find("partition 3") != std::string::npos);
    CHECK(std::string(e.what()).find("block 6") != std::string::npos);
  }
  const auto proj = typecheck(Projection{{"met_pt", Expr::parse("met.pt")}}, event_schema());
  {
    NtuWriter sink(dir.file("out.ntu"), proj.columns());
    CHECK(code_of([&] {
            filter_map_write(ds, {2}, typecheck_cut(Expr::parse("true"), event_schema()), proj, {}, sink);
          }) == Errc::CrcMismatch);
  }
  CHECK_FALSE(std::filesystem::exists(dir.file("out.ntu")));
}
