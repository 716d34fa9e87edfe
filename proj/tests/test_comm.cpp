#include <doctest.h>

#include <random>
#include <thread>

#include "tilegraph/communicator.hpp"
#include "tilegraph/errors.hpp"
#include "tilegraph/update_message.hpp"

using namespace tilegraph;

namespace {

TileDescriptor tile_range(VertexId first, std::uint32_t n, TileId id = 0) {
  TileDescriptor d;
  d.tile_id = id;
  d.first_target = first;
  d.num_targets = n;
  return d;
}

UpdateBatch random_batch(std::mt19937_64& rng, const TileDescriptor& d, double fraction) {
  UpdateBatch b{d.tile_id, {}};
  std::uniform_real_distribution<double> value(-1e6, 1e6);
  std::bernoulli_distribution pick(fraction);
  for (std::uint32_t i = 0; i < d.num_targets; ++i)
    if (pick(rng)) b.updates.push_back({d.first_target + i, value(rng)});
  return b;
}

CommConfig quick(CommMode mode = CommMode::hybrid) {
  CommConfig c;
  c.policy.mode = mode;
  c.barrier_timeout = std::chrono::milliseconds(2000);
  return c;
}

}  // namespace

TEST_SUITE("comm") {
  TEST_CASE("sparsity ratio and encoding choice") {
    CHECK(sparsity_ratio(10, 2) == doctest::Approx(0.8));
    CHECK(sparsity_ratio(0, 0) == 1.0);
    SparsityPolicy hybrid;
    CHECK(choose_encoding(hybrid, 10, 2) == FrameKind::dense);  // 0.8 is not > 0.8
    CHECK(choose_encoding(hybrid, 10, 1) == FrameKind::sparse);
    CHECK(choose_encoding(hybrid, 100, 19) == FrameKind::sparse);
    CHECK(choose_encoding(hybrid, 100, 21) == FrameKind::dense);
    CHECK(choose_encoding({CommMode::dense, 0.8}, 100, 1) == FrameKind::dense);
    CHECK(choose_encoding({CommMode::sparse, 0.8}, 100, 100) == FrameKind::sparse);
    CHECK(parse_comm_mode("sparse") == CommMode::sparse);
    CHECK_THROWS_AS(parse_comm_mode("both"), DomainError);
    CHECK(parse_wire_codec("high") == WireCodec::high);
    CHECK_THROWS_AS(parse_wire_codec("zstd"), DomainError);
  }

  TEST_CASE("payload sizes") {
    CHECK(dense_payload_bytes(10) == 2 + 80);
    CHECK(dense_payload_bytes(8) == 1 + 64);
    CHECK(sparse_payload_bytes(3) == 4 + 36);
    for (std::uint32_t n = 1; n < 2000; ++n)
      CHECK(sparse_payload_bytes(n / 5) < dense_payload_bytes(n));
  }

  TEST_CASE("dense and sparse carry the same updates through every codec") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
      auto d = tile_range(static_cast<VertexId>(rng() % 1000), 1 + static_cast<std::uint32_t>(rng() % 300), 7);
      auto batch = random_batch(rng, d, std::uniform_real_distribution<double>(0, 1)(rng));
      for (auto codec : {WireCodec::none, WireCodec::fast, WireCodec::high}) {
        auto dense = encode_updates(batch, d, {CommMode::dense, 0.8}, codec, 3, 1);
        auto sparse = encode_updates(batch, d, {CommMode::sparse, 0.8}, codec, 3, 1);
        CHECK(dense.kind == FrameKind::dense);
        CHECK(sparse.kind == FrameKind::sparse);
        auto dense_rt = parse_frame(serialize_frame(dense));
        auto sparse_rt = parse_frame(serialize_frame(sparse));
        CHECK(dense_rt == dense);
        CHECK(sparse_rt == sparse);
        REQUIRE(decode_updates(dense_rt) == batch.updates);
        REQUIRE(decode_updates(sparse_rt) == batch.updates);
      }
    }
  }

  TEST_CASE("frame header layout") {
    auto d = tile_range(5, 3, 9);
    auto msg = encode_updates({9, {{6, 1.0}}}, d, {CommMode::sparse, 0.8}, WireCodec::none, 0x01020304, 0x0506);
    auto f = serialize_frame(msg);
    REQUIRE(f.size() == kFrameHeaderBytes + sparse_payload_bytes(1) + 4);
    CHECK(std::string(f.begin(), f.begin() + 4) == "TGM1");
    CHECK(f[4] == 0x04);
    CHECK(f[7] == 0x01);
    CHECK(f[8] == 0x06);
    CHECK(f[9] == 0x05);
    CHECK(f[10] == 1);  // sparse
    CHECK(f[11] == 0);  // no codec
    CHECK(f[12] == 9);
    CHECK(f[16] == 5);
    CHECK(f[20] == 3);
    CHECK(f[24] == sparse_payload_bytes(1));
  }

  TEST_CASE("malformed frames and batches are rejected") {
    auto d = tile_range(10, 4);
    CHECK_THROWS_AS(encode_updates({0, {{9, 1.0}}}, d, {}, WireCodec::none, 1, 0), DomainError);
    CHECK_THROWS_AS(encode_updates({0, {{14, 1.0}}}, d, {}, WireCodec::none, 1, 0), DomainError);
    CHECK_THROWS_AS(encode_updates({0, {{12, 1.0}, {11, 2.0}}}, d, {}, WireCodec::none, 1, 0), DomainError);
    CHECK_THROWS_AS(encode_updates({0, {{12, 1.0}, {12, 2.0}}}, d, {}, WireCodec::none, 1, 0), DomainError);

    auto f = serialize_frame(encode_updates({0, {{12, 1.0}}}, d, {}, WireCodec::fast, 1, 0));
    auto bad = f;
    bad[bad.size() - 6] ^= 0x40;
    CHECK_THROWS_AS(parse_frame(bad), ChecksumError);
    bad = f;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse_frame(bad), FormatError);
    CHECK_THROWS_AS(parse_frame(std::span(f).first(20)), FormatError);
  }

  TEST_CASE("barrier message") {
    auto m = make_barrier_message(4, 2, 123456789012ULL);
    auto rt = parse_frame(serialize_frame(m));
    CHECK(rt.kind == FrameKind::barrier);
    CHECK(barrier_count(rt) == 123456789012ULL);
  }

  TEST_CASE("decode_and_apply stages values and checks the superstep") {
    VertexStateArrays s(20);
    auto d = tile_range(10, 5);
    auto msg = encode_updates({0, {{11, 2.5}, {14, -1.0}}}, d, {CommMode::dense, 0.8}, WireCodec::none, 6, 1);
    CHECK(decode_and_apply(msg, s, 6) == 2);
    CHECK(s.updated_flags.test(11));
    CHECK(s.updated_flags.test(14));
    CHECK(!s.updated_flags.test(12));
    CHECK(s.updated_value[11] == 2.5);
    CHECK(s.value[11] == 0.0);
    CHECK_THROWS_AS(decode_and_apply(msg, s, 7), ProtocolError);
    VertexStateArrays small(12);
    CHECK_THROWS_AS(decode_and_apply(msg, small, 6), ProtocolError);
  }

  TEST_CASE("two communicators exchange updates and counts") {
    LocalHub hub(2);
    auto e0 = hub.endpoint(0), e1 = hub.endpoint(1);
    VertexStateArrays s0(8), s1(8);
    Communicator c0(*e0, quick(), s0), c1(*e1, quick(), s1);
    c0.start(1);
    c1.start(1);
    auto d0 = tile_range(0, 4, 0), d1 = tile_range(4, 4, 1);

    s0.stage(1, 10.0);
    c0.broadcast({0, {{1, 10.0}}}, d0);
    s1.stage(5, 50.0);
    s1.stage(6, 60.0);
    c1.broadcast({1, {{5, 50.0}, {6, 60.0}}}, d1);
    c1.broadcast({1, {}}, d1);  // empty batches never hit the wire

    std::uint64_t g1 = 0;
    std::thread t([&] { g1 = c1.barrier(2); });
    auto g0 = c0.barrier(1);
    t.join();
    CHECK(g0 == 3);
    CHECK(g1 == 3);
    for (auto* s : {&s0, &s1}) {
      CHECK(s->updated_flags.count() == 3);
      CHECK(s->updated_value[1] == 10.0);
      CHECK(s->updated_value[6] == 60.0);
    }
    CHECK(c1.frames_sent() == 2);  // one update frame and one barrier

    // Rank 1 races ahead into superstep 2; its frame is held until advance().
    c1.advance();
    s1.updated_flags.clear_all();
    c1.broadcast({1, {{7, 70.0}}}, d1);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(!s0.updated_flags.test(7));
    s0.updated_flags.clear_all();
    c0.advance();
    CHECK(s0.updated_flags.test(7));
    CHECK(c0.superstep() == 2);

    t = std::thread([&] { g1 = c1.barrier(1); });
    g0 = c0.barrier(0);
    t.join();
    CHECK(g0 == 1);
    c0.stop();
    c1.stop();
  }

  TEST_CASE("barrier reports a disconnected peer") {
    LocalHub hub(3);
    auto e0 = hub.endpoint(0), e1 = hub.endpoint(1), e2 = hub.endpoint(2);
    VertexStateArrays s0(4), s1(4);
    Communicator c0(*e0, quick(), s0), c1(*e1, quick(), s1);
    c0.start(1);
    c1.start(1);
    e2->abort();
    std::thread t([&] { CHECK_THROWS_AS(c1.barrier(0), TransportError); });
    try {
      c0.barrier(0);
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(std::string(e.what()).find("2=disconnected") != std::string::npos);
    }
    t.join();
    c0.abort();
    c1.abort();
  }

  TEST_CASE("barrier times out when a peer stays silent") {
    LocalHub hub(2);
    auto e0 = hub.endpoint(0), e1 = hub.endpoint(1);
    VertexStateArrays s0(4);
    CommConfig c = quick();
    c.barrier_timeout = std::chrono::milliseconds(200);
    Communicator c0(*e0, c, s0);
    c0.start(1);
    try {
      c0.barrier(0);
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(std::string(e.what()).find("timed out") != std::string::npos);
      CHECK(std::string(e.what()).find("1=waiting") != std::string::npos);
    }
    c0.abort();
  }

  TEST_CASE("a frame from the wrong superstep is a protocol error") {
    LocalHub hub(2);
    auto e0 = hub.endpoint(0), e1 = hub.endpoint(1);
    VertexStateArrays s0(8);
    Communicator c0(*e0, quick(), s0);
    c0.start(1);
    auto frame = serialize_frame(encode_updates({0, {{1, 1.0}}}, tile_range(0, 4), {}, WireCodec::none, 5, 1));
    e1->send(0, frame);
    CHECK_THROWS_AS(c0.barrier(0), ProtocolError);
    c0.abort();
  }
}
