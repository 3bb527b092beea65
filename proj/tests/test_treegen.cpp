#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "ffsim/codec.hpp"
#include "ffsim/treegen.hpp"
#include "test_util.hpp"

using namespace ffsim;
using test::code_of;

TEST_CASE("distribution means match the closed forms") {
  CHECK(Distribution::constant(7).mean() == 7.0);
  CHECK(Distribution::uniform_int(3, 9).mean() == 6.0);
  // Truncated geometric: sum(k q^k) / sum(q^k) over {0..cap}, checked against
  // independent high-precision evaluation.
  CHECK(Distribution::geometric(0.5, 100).mean() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(Distribution::geometric(0.25, 100).mean() ==
        doctest::Approx(2.9999999999757057).epsilon(1e-12));
  CHECK(Distribution::geometric(0.01, 5).mean() ==
        doctest::Approx(2.4706883461775395).epsilon(1e-12));
  CHECK(Distribution::geometric(0.9, 3).mean() ==
        doctest::Approx(0.11071107110711072).epsilon(1e-12));
  CHECK(Distribution::geometric(1.0, 9).mean() == 0.0);
}

TEST_CASE("samples follow their distribution") {
  std::mt19937_64 rng(99);

  auto c = Distribution::constant(4);
  for (int i = 0; i < 100; ++i) CHECK(c.sample(rng) == 4);

  // Uniform: support respected, every value hit, near-flat histogram.
  auto u = Distribution::uniform_int(3, 9);
  const int n = 70000;
  std::map<uint64_t, int> hist;
  for (int i = 0; i < n; ++i) {
    uint64_t v = u.sample(rng);
    REQUIRE(v >= 3);
    REQUIRE(v <= 9);
    hist[v]++;
  }
  REQUIRE(hist.size() == 7);
  for (const auto& [v, count] : hist) CHECK(std::abs(count - n / 7) < n / 7 * 0.05);

  // Geometric: support respected, empirical mean tracks the analytic mean.
  for (auto d : {Distribution::geometric(0.5, 100), Distribution::geometric(0.01, 5)}) {
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
      uint64_t v = d.sample(rng);
      REQUIRE(v <= d.cap);
      sum += double(v);
    }
    CHECK(sum / 100000 == doctest::Approx(d.mean()).epsilon(0.03));
  }

  // p = 1 degenerates to always zero.
  auto one = Distribution::geometric(1.0, 50);
  for (int i = 0; i < 100; ++i) CHECK(one.sample(rng) == 0);
}

TEST_CASE("distribution text form round-trips") {
  const char* texts[] = {"constant(5)", "uniform(2,9)", "geometric(0.5,100)",
                         "geometric(0.25,8)"};
  for (const char* t : texts) {
    auto d = Distribution::parse(t);
    REQUIRE(d);
    CHECK(d->describe() == t);
  }
  CHECK(Distribution::parse("uniform( 2 , 9 )"));  // spaces tolerated

  CHECK(!Distribution::parse(""));
  CHECK(!Distribution::parse("constant"));
  CHECK(!Distribution::parse("constant(5"));
  CHECK(!Distribution::parse("normal(0,1)"));
  CHECK(!Distribution::parse("constant(x)"));
  CHECK(!Distribution::parse("uniform(9)"));
  CHECK(!Distribution::parse("uniform(9,2)"));    // reversed bounds
  CHECK(!Distribution::parse("geometric(0,5)"));  // p outside (0,1]
  CHECK(!Distribution::parse("geometric(1.5,5)"));
}

TEST_CASE("invalid parameters are rejected at construction") {
  CHECK(code_of([] { Distribution::uniform_int(9, 2); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { Distribution::geometric(0.0, 5); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { Distribution::geometric(-0.5, 5); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { Distribution::geometric(1.01, 5); }) == ErrorCode::BadConfig);
}

TEST_CASE("content profile names round-trip") {
  for (auto p : {ContentProfile::Zeros, ContentProfile::Random, ContentProfile::TextLike})
    CHECK(content_profile_from_name(content_profile_name(p)) == p);
  CHECK(!content_profile_from_name("sparse"));
}

TEST_CASE("constant branching expands to the exact known tree") {
  TreeSpec spec;
  spec.files_per_dir = Distribution::constant(1);
  spec.dirs_per_dir = Distribution::constant(2);
  spec.file_size = Distribution::constant(10);
  spec.depth = 2;
  spec.seed = 42;  // irrelevant for constant distributions
  auto m = generate(spec);

  const char* want[] = {"/",         "/f0",       "/d1",       "/d2",      "/d1/f3",
                        "/d1/d4",    "/d1/d5",    "/d1/d4/f6", "/d1/d5/f7", "/d2/f8",
                        "/d2/d9",    "/d2/d10",   "/d2/d9/f11", "/d2/d10/f12"};
  REQUIRE(m.rows.size() == 14);
  for (size_t i = 0; i < 14; ++i) CHECK(m.rows[i].path == want[i]);
  CHECK(m.dir_count() == 7);  // root included
  CHECK(m.file_count() == 7);
  CHECK(m.total_bytes() == 70);
  CHECK(m.rows[1].kind == NodeKind::File);
  CHECK(m.rows[1].size == 10);
  CHECK(m.rows[2].kind == NodeKind::Dir);
  CHECK(m.rows[2].size == 0);

  // Same seed, same manifest; different seed with random sizes differs.
  auto m2 = generate(spec);
  CHECK(m2.to_csv() == m.to_csv());
}

TEST_CASE("generation is a pure function of the spec") {
  TreeSpec spec;
  spec.files_per_dir = Distribution::geometric(0.4, 8);
  spec.dirs_per_dir = Distribution::uniform_int(0, 3);
  spec.file_size = Distribution::uniform_int(0, 5000);
  spec.depth = 4;
  spec.seed = 1234;
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.to_csv() == b.to_csv());
  spec.seed = 1235;
  auto c = generate(spec);
  CHECK(c.to_csv() != a.to_csv());

  // Every parent precedes its children.
  std::map<std::string, NodeKind> seen;
  for (const auto& row : a.rows) {
    if (row.path != "/") {
      auto slash = row.path.rfind('/');
      std::string parent = slash == 0 ? "/" : row.path.substr(0, slash);
      REQUIRE(seen.count(parent));
      REQUIRE(seen[parent] == NodeKind::Dir);
    }
    seen[row.path] = row.kind;
  }
}

TEST_CASE("expected node counts above a million are refused") {
  TreeSpec spec;
  spec.files_per_dir = Distribution::constant(0);
  spec.dirs_per_dir = Distribution::constant(10);
  spec.depth = 7;  // 1 + 10 + ... + 10^7 dirs expected
  CHECK(code_of([&] { generate(spec); }) == ErrorCode::TooLarge);
  spec.depth = 3;  // 1111 dirs: fine
  CHECK(generate(spec).dir_count() == 1111);
}

TEST_CASE("manifest csv round-trips and rejects malformed input") {
  TreeSpec spec;
  spec.files_per_dir = Distribution::uniform_int(0, 3);
  spec.dirs_per_dir = Distribution::constant(1);
  spec.file_size = Distribution::uniform_int(0, 100);
  spec.depth = 3;
  spec.seed = 7;
  auto m = generate(spec);
  auto csv = m.to_csv();
  CHECK(csv.substr(0, 15) == "path,kind,size\n");
  auto back = TreeManifest::from_csv(csv);
  REQUIRE(back.rows.size() == m.rows.size());
  CHECK(back.to_csv() == csv);
  CHECK(back.total_bytes() == m.total_bytes());

  CHECK(code_of([] { TreeManifest::from_csv(""); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { TreeManifest::from_csv("path,size\n"); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { TreeManifest::from_csv("path,kind,size\n/x,link,0\n"); }) ==
        ErrorCode::BadConfig);
  CHECK(code_of([] { TreeManifest::from_csv("path,kind,size\n/x,file,big\n"); }) ==
        ErrorCode::BadConfig);
  CHECK(code_of([] { TreeManifest::from_csv("path,kind,size\nnocommas\n"); }) ==
        ErrorCode::BadConfig);
}

TEST_CASE("glob matching") {
  CHECK(glob_match("*", "anything"));
  CHECK(glob_match("*", ""));
  CHECK(glob_match("", ""));
  CHECK(!glob_match("", "x"));
  CHECK(glob_match("f*", "f12"));
  CHECK(glob_match("f*", "f"));
  CHECK(!glob_match("f*", "d3"));
  CHECK(glob_match("*7", "f17"));
  CHECK(!glob_match("*7", "f71"));
  CHECK(glob_match("f*1*", "f012"));
  CHECK(!glob_match("f*1*", "f000"));
  CHECK(glob_match("exact", "exact"));
  CHECK(!glob_match("exact", "exactly"));
}

TEST_CASE("content profiles are deterministic and codec-distinct") {
  TreeSpec spec;
  spec.seed = 31;

  spec.content = ContentProfile::Zeros;
  auto z = make_content(spec, 5, 4096);
  CHECK(z == std::vector<uint8_t>(4096, 0));

  spec.content = ContentProfile::Random;
  auto r1 = make_content(spec, 5, 4096);
  auto r2 = make_content(spec, 5, 4096);
  CHECK(r1 == r2);
  CHECK(r1 != make_content(spec, 6, 4096));
  CHECK(make_content(spec, 5, 0).empty());

  spec.content = ContentProfile::TextLike;
  auto t = make_content(spec, 5, 4096);
  for (uint8_t b : t) CHECK((b == ' ' || (b >= 'a' && b <= 'z')));
  for (size_t i = spec.text_period; i < t.size(); ++i)
    REQUIRE(t[i] == t[i % spec.text_period]);

  // The profiles sit at three compressibility levels: zeros collapse, text
  // shrinks, random stays raw.
  auto [cz, ez] = compress(Codec::Rle, z);
  auto [ct, et] = compress(Codec::Rle, t);
  auto [cr, er] = compress(Codec::Rle, r1);
  CHECK(cz == Codec::Rle);
  CHECK(ct == Codec::Rle);
  CHECK(cr == Codec::None);
  CHECK(ez.size() < et.size());
  CHECK(et.size() < er.size());
}

TEST_CASE("apply, walk, and delete drive a live filesystem") {
  TreeSpec spec;
  spec.files_per_dir = Distribution::constant(2);
  spec.dirs_per_dir = Distribution::constant(2);
  spec.file_size = Distribution::uniform_int(0, 600);
  spec.depth = 2;
  spec.content = ContentProfile::TextLike;
  spec.seed = 9;
  auto m = generate(spec);

  for (Variant v : {Variant::LogTable, Variant::Tree}) {
    CAPTURE(std::string(variant_name(v)));
    FlashGeometry g;
    g.num_blocks = 64;
    g.pages_per_block = 16;
    g.page_size = 512;
    g.oob_size = 16;
    FlashDevice dev(g, 40);
    format(dev, v);
    auto [fs, ms] = mount(dev, v);

    ApplyStats as = apply(*fs, m, spec);
    uint64_t want_ops = 0;
    for (size_t i = 0; i < m.rows.size(); ++i) {
      const auto& row = m.rows[i];
      if (row.path == "/") continue;
      want_ops += row.kind == NodeKind::File && row.size > 0 ? 2 : 1;
      auto st = fs->stat(row.path);
      CHECK(st.kind == row.kind);
      if (row.kind == NodeKind::File) {
        CHECK(st.size == row.size);
        CHECK(fs->read_file(row.path, 0, row.size) == make_content(spec, i, row.size));
      }
    }
    CHECK(as.ops == want_ops);
    CHECK(as.pages_written > 0);
    CHECK(as.simulated_time_us > 0);

    WalkStats files = find_walk(*fs, m, "f*");
    CHECK(files.hits == m.file_count());
    WalkStats all = find_walk(*fs, m, "*");
    CHECK(all.hits == m.rows.size() - 1);
    if (v == Variant::LogTable) {
      // Table index lives in RAM: a namespace walk touches no flash.
      CHECK(all.pages_read == 0);
    } else {
      // Tree lookups read metadata records from flash.
      CHECK(all.pages_read > 0);
    }

    ApplyStats del = delete_tree(*fs, m);
    CHECK(del.ops == m.rows.size() - 1);
    CHECK(fs->readdir("/").empty());
    fs->unmount(true);
  }
}
