#include <doctest.h>

#include <random>

#include "tilegraph/bloom_filter.hpp"
#include "tilegraph/dataset.hpp"
#include "tilegraph/errors.hpp"
#include "tilegraph/tile.hpp"
#include "test_support.hpp"

using namespace tilegraph;
using tilegraph::testing::TempDir;

namespace {

Tile sample_tile(bool weighted) {
  Tile t;
  t.tile_id = 3;
  t.first_target = 10;
  t.num_targets = 3;
  t.weighted = weighted;
  t.row = {0, 2, 2, 5};
  t.col = {1, 4, 0, 2, 9};
  if (weighted) t.val = {1.5, 2.0, 0.25, 8.0, 3.0};
  return t;
}

}  // namespace

TEST_SUITE("tile-store") {
  TEST_CASE("tile round trip") {
    for (bool weighted : {false, true}) {
      auto t = sample_tile(weighted);
      auto bytes = encode_tile(t);
      CHECK(bytes.size() == encoded_tile_size(3, 5, weighted));
      CHECK(decode_tile(bytes) == t);
    }
  }

  TEST_CASE("tile byte layout") {
    Tile t;
    t.tile_id = 1;
    t.first_target = 7;
    t.num_targets = 1;
    t.row = {0, 1};
    t.col = {4};
    auto b = encode_tile(t);
    REQUIRE(b.size() == 28 + 8 + 4 + 4);
    CHECK(std::string(b.begin(), b.begin() + 4) == "TGT1");
    auto u32 = [&](std::size_t off) {
      return std::uint32_t(b[off]) | std::uint32_t(b[off + 1]) << 8 | std::uint32_t(b[off + 2]) << 16 |
             std::uint32_t(b[off + 3]) << 24;
    };
    CHECK(u32(4) == 1);
    CHECK(u32(8) == 7);
    CHECK(u32(12) == 1);
    CHECK(u32(16) == 0);
    CHECK(u32(20) == 1);  // num_edges low half
    CHECK(u32(24) == 0);
    CHECK(u32(28) == 0);  // row
    CHECK(u32(32) == 1);
    CHECK(u32(36) == 4);  // col
    CHECK(u32(40) == crc32(std::span(b).first(40)));
  }

  TEST_CASE("empty tile is the header, row[0] and the checksum") {
    Tile t;
    auto b = encode_tile(t);
    CHECK(b.size() == 36);
    CHECK(decode_tile(b) == t);
  }

  TEST_CASE("corrupt tiles are rejected") {
    auto b = encode_tile(sample_tile(true));
    auto flipped = b;
    flipped[40] ^= 0x01;
    CHECK_THROWS_AS(decode_tile(flipped), ChecksumError);

    auto version = b;
    version[3] = '2';
    CHECK_THROWS_AS(decode_tile(version), UnsupportedVersionError);

    auto magic = b;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_tile(magic), FormatError);

    CHECK_THROWS_AS(decode_tile(std::span(b).first(b.size() - 3)), FormatError);
    CHECK_THROWS_AS(decode_tile(std::span(b).first(10)), FormatError);
  }

  TEST_CASE("encode rejects broken CSR") {
    auto t = sample_tile(false);
    t.row = {0, 3, 2, 5};
    CHECK_THROWS_AS(encode_tile(t), ConsistencyError);
    t = sample_tile(false);
    t.row.back() = 4;
    CHECK_THROWS_AS(encode_tile(t), ConsistencyError);
    t = sample_tile(true);
    t.val.pop_back();
    CHECK_THROWS_AS(encode_tile(t), ConsistencyError);
  }

  TEST_CASE("tile_of_vertex") {
    SplitterTable s{{0, 2, 4, 5}};
    CHECK(tile_of_vertex(0, s) == 0);
    CHECK(tile_of_vertex(1, s) == 0);
    CHECK(tile_of_vertex(2, s) == 1);
    CHECK(tile_of_vertex(4, s) == 2);
    CHECK_THROWS_AS(tile_of_vertex(5, s), DomainError);
    CHECK_THROWS_AS(tile_of_vertex(0, SplitterTable{}), DomainError);
  }

  TEST_CASE("bloom filter has no false negatives and few false positives") {
    std::mt19937_64 rng(1);
    BloomFilter f(1000);
    CHECK(f.num_bits() % 64 == 0);
    CHECK(f.num_bits() >= 10000);
    std::vector<VertexId> keys;
    for (int i = 0; i < 1000; ++i) keys.push_back(static_cast<VertexId>(rng() % 1000000));
    for (auto k : keys) f.insert(k);
    for (auto k : keys) CHECK(f.may_contain(k));
    int fp = 0;
    for (VertexId k = 2000000; k < 2100000; ++k) fp += f.may_contain(k);
    CHECK(fp < 3000);  // about 1% expected

    BloomFilter empty(0);
    CHECK(!empty.may_contain(0));
    CHECK_THROWS_AS(empty.insert(1), CapacityError);
    CHECK_THROWS_AS(BloomFilter(65, 7, {0, 0}), FormatError);
  }

  TEST_CASE("manifest and arrays round trip; damage is detected") {
    std::mt19937_64 rng(2);
    auto edges = testing::random_graph({.vertices = 50, .edges = 300, .weighted = true}, rng);
    TempDir dir;
    auto m = testing::build_dataset(edges, true, 40, dir.path());
    auto bytes = encode_manifest(m);
    CHECK(decode_manifest(bytes) == m);
    auto broken = bytes;
    broken[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(decode_manifest(broken), ChecksumError);
    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(decode_manifest(version), FormatError);

    std::vector<std::uint32_t> a{1, 2, 3};
    CHECK(decode_u32_array(encode_u32_array(a)) == a);
    std::vector<std::uint64_t> c{1ULL << 40, 0};
    CHECK(decode_u64_array(encode_u64_array(c)) == c);
    auto enc = encode_u32_array(a);
    enc[9] ^= 1;
    CHECK_THROWS_AS(decode_u32_array(enc), FormatError);
  }

  TEST_CASE("dataset checks tile files against the manifest") {
    std::vector<EdgeRecord> edges{{0, 1}, {1, 2}, {2, 0}, {2, 1}};
    TempDir dir;
    auto m = testing::build_dataset(edges, false, 2, dir.path());
    auto ds = Dataset::open(dir.path());
    CHECK(ds.load_in_degree() == std::vector<std::uint32_t>{1, 2, 1});
    CHECK(ds.load_out_degree() == std::vector<std::uint32_t>{1, 1, 2});
    CHECK_THROWS_AS(ds.load_tile(m.tile_count()), DomainError);

    auto path = dataset_files::tile_path(dir.path(), 0);
    auto original = read_file(path);
    auto damaged = original;
    damaged[30] ^= 0xff;
    write_file(path, damaged);
    CHECK_THROWS_AS(ds.load_tile(0), ChecksumError);
    damaged = original;
    damaged.push_back(0);
    write_file(path, damaged);
    CHECK_THROWS_AS(ds.load_tile(0), FormatError);

    // A valid tile in the wrong slot.
    write_file(path, read_file(dataset_files::tile_path(dir.path(), 1)));
    CHECK_THROWS(ds.load_tile(0));
    write_file(path, original);
    CHECK_NOTHROW(ds.load_tile(0));

    CHECK_THROWS_AS(Dataset::open(dir / "missing"), IoError);
  }
}
