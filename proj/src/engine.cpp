#include "tilegraph/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>

#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace {

using Clock = std::chrono::steady_clock;

/// Reusable rendezvous for the local cluster's per-superstep observer.
class RoundBarrier {
 public:
  explicit RoundBarrier(unsigned parties) : parties_(parties) {}

  void arrive_and_wait(const std::function<void()>& completion) {
    std::unique_lock lock(mu_);
    if (aborted_) throw Error("cluster aborted");
    auto gen = generation_;
    if (++arrived_ == parties_) {
      arrived_ = 0;
      try {
        if (completion) completion();
      } catch (...) {
        aborted_ = true;
        cv_.notify_all();
        throw;
      }
      ++generation_;
      cv_.notify_all();
      return;
    }
    cv_.wait(lock, [&] { return aborted_ || generation_ != gen; });
    if (generation_ == gen) throw Error("cluster aborted");
  }

  void abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    cv_.notify_all();
  }

 private:
  unsigned parties_;
  std::mutex mu_;
  std::condition_variable cv_;
  unsigned arrived_ = 0;
  std::uint64_t generation_ = 0;
  bool aborted_ = false;
};

}  // namespace

// ---------------------------------------------------------------------------
// WorkerPool

WorkerPool::WorkerPool(unsigned workers) : workers_(std::max(1u, workers)) {
  for (unsigned i = 1; i < workers_; ++i) threads_.emplace_back([this, i] { loop(i); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run(const std::function<void(unsigned)>& task) {
  if (workers_ == 1) {
    task(0);
    return;
  }
  {
    std::lock_guard lock(mu_);
    task_ = &task;
    pending_ = workers_ - 1;
    failure_ = nullptr;
    ++generation_;
  }
  start_cv_.notify_all();
  try {
    task(0);
  } catch (...) {
    std::lock_guard lock(mu_);
    if (!failure_) failure_ = std::current_exception();
  }
  std::unique_lock lock(mu_);
  done_cv_.wait(lock, [&] { return pending_ == 0; });
  task_ = nullptr;
  if (failure_) std::rethrow_exception(std::exchange(failure_, nullptr));
}

void WorkerPool::loop(unsigned index) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(unsigned)>* task;
    {
      std::unique_lock lock(mu_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      task = task_;
    }
    try {
      (*task)(index);
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!failure_) failure_ = std::current_exception();
    }
    std::lock_guard lock(mu_);
    if (--pending_ == 0) done_cv_.notify_all();
  }
}

// ---------------------------------------------------------------------------

void EngineConfig::validate() const {
  if (num_servers < 1) throw DomainError("need at least one server");
  if (workers_per_server < 1) throw DomainError("need at least one worker per server");
  if (max_supersteps < 1) throw DomainError("max_supersteps must be >= 1");
  if (!(comm.policy.threshold >= 0.0 && comm.policy.threshold <= 1.0))
    throw DomainError("sparsity threshold must lie in [0, 1]");
}

SuperstepReport combine_reports(std::span<const SuperstepReport> per_server) {
  SuperstepReport out;
  if (per_server.empty()) return out;
  out.superstep = per_server.front().superstep;
  out.updated_vertex_count = per_server.front().updated_vertex_count;
  for (const auto& r : per_server) {
    out.tiles_assigned += r.tiles_assigned;
    out.tiles_processed += r.tiles_processed;
    out.tiles_skipped += r.tiles_skipped;
    out.cache.hits += r.cache.hits;
    out.cache.misses += r.cache.misses;
    out.cache.evictions += r.cache.evictions;
    out.cache.bytes_resident += r.cache.bytes_resident;
    out.cache.disk_reads += r.cache.disk_reads;
    out.cache.disk_bytes_read += r.cache.disk_bytes_read;
    out.cache.raw_bytes_admitted += r.cache.raw_bytes_admitted;
    out.cache.compressed_bytes_admitted += r.cache.compressed_bytes_admitted;
    out.bytes_broadcast += r.bytes_broadcast;
    out.frames_broadcast += r.frames_broadcast;
    out.wall_seconds = std::max(out.wall_seconds, r.wall_seconds);
  }
  return out;
}

std::vector<std::vector<TileId>> assign_tiles(const DatasetManifest& manifest, std::uint16_t num_servers) {
  if (num_servers < 1) throw DomainError("need at least one server");
  std::vector<std::vector<TileId>> out(num_servers);
  for (TileId t = 0; t < manifest.tile_count(); ++t) out[t % num_servers].push_back(t);
  return out;
}

UpdatedSet UpdatedSet::everything() {
  UpdatedSet s;
  s.all_ = true;
  return s;
}

UpdatedSet UpdatedSet::from_flags(const ConcurrentBitset& flags, double full_scan_ratio) {
  auto n = flags.count();
  if (n > 0 && static_cast<double>(n) > full_scan_ratio * static_cast<double>(flags.size())) return everything();
  UpdatedSet s;
  s.ids_.reserve(n);
  for (std::size_t w = 0; w < flags.word_count(); ++w) {
    auto bits = flags.word(w);
    while (bits) {
      auto b = static_cast<std::size_t>(std::countr_zero(bits));
      s.ids_.push_back(static_cast<VertexId>(w * 64 + b));
      bits &= bits - 1;
    }
  }
  return s;
}

UpdatedSet UpdatedSet::of(std::vector<VertexId> ids) {
  UpdatedSet s;
  s.ids_ = std::move(ids);
  return s;
}

bool should_process(const TileDescriptor& tile, const UpdatedSet& updated) {
  if (updated.all()) return true;
  if (tile.num_edges == 0) return false;
  return std::any_of(updated.ids().begin(), updated.ids().end(),
                     [&](VertexId v) { return tile.sources.may_contain(v); });
}

UpdateBatch process_tile(const Tile& tile, const VertexStateArrays& states, const VertexProgram& program) {
  if (std::uint64_t{tile.first_target} + tile.num_targets > states.size())
    throw ConsistencyError("tile " + std::to_string(tile.tile_id) + " targets exceed |V|");
  if (!tile.col.empty() && *std::max_element(tile.col.begin(), tile.col.end()) >= states.size())
    throw ConsistencyError("tile " + std::to_string(tile.tile_id) + " references a source >= |V|");

  UpdateBatch batch;
  batch.tile_id = tile.tile_id;
  for (std::uint32_t i = 0; i < tile.num_targets; ++i) {
    const VertexId v = tile.first_target + i;
    const double old = states.value[v];
    double candidate;
    try {
      double accum = program.gather(v, InEdges{tile.sources_of(i), tile.weights_of(i)}, states);
      candidate = program.apply(accum, old);
    } catch (const ProgramError&) {
      throw;
    } catch (const std::exception& e) {
      throw ProgramError(e.what(), tile.tile_id, v);
    }
    if (candidate != old) batch.updates.push_back({v, candidate});
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Server

Server::Server(const Dataset& dataset, EngineConfig config, Transport& transport,
               std::unique_ptr<VertexProgram> program)
    : dataset_(dataset),
      config_((config.validate(), config)),
      transport_(transport),
      program_(std::move(program)),
      tiles_(assign_tiles(dataset.manifest(), transport.size()).at(transport.rank())),
      states_(dataset.manifest().vertex_count),
      cache_(dataset, config_.cache, tiles_),
      comm_(transport, config_.comm, states_),
      pool_(config_.workers_per_server) {
  if (!program_) throw DomainError("no vertex program");
  if (transport.size() != config_.num_servers)
    throw DomainError("transport has " + std::to_string(transport.size()) + " endpoints but the run expects " +
                      std::to_string(config_.num_servers) + " servers");
}

Server::~Server() = default;

void Server::initialize() {
  program_->init(states_, dataset_);
  states_.updated_flags.clear_all();
  states_.prev_updated_flags.set_all();
  active_ = UpdatedSet::everything();
  superstep_ = 1;
  comm_.start(superstep_);
  initialized_ = true;
}

SuperstepReport Server::run_superstep() {
  if (!initialized_) throw Error("server not initialized");
  const auto started = Clock::now();
  const auto cache_before = cache_.stats();
  const auto bytes_before = comm_.bytes_sent();
  const auto frames_before = comm_.frames_sent();
  const auto& manifest = dataset_.manifest();

  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> processed{0}, skipped{0}, owned_updates{0};
  pool_.run([&](unsigned) {
    for (std::size_t i; (i = next.fetch_add(1)) < tiles_.size();) {
      const TileId t = tiles_[i];
      const auto& desc = manifest.tiles[t];
      if (config_.skip_inactive_tiles && !should_process(desc, active_)) {
        skipped.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      Tile tile = cache_.get_tile(t);
      UpdateBatch batch = process_tile(tile, states_, *program_);
      for (const auto& u : batch.updates) states_.stage(u.vertex, u.value);
      owned_updates.fetch_add(batch.updates.size(), std::memory_order_relaxed);
      comm_.broadcast(batch, desc);
      processed.fetch_add(1, std::memory_order_relaxed);
    }
  });

  const std::uint64_t global = comm_.barrier(owned_updates.load());

  // Apply staged values, split across workers on 64-vertex boundaries.
  const std::size_t n = states_.size();
  const std::size_t words = (n + 63) / 64;
  std::atomic<std::uint64_t> applied{0};
  pool_.run([&](unsigned w) {
    const std::size_t per = (words + pool_.size() - 1) / pool_.size();
    const std::size_t begin = std::min(n, std::size_t{w} * per * 64);
    const std::size_t end = std::min(n, (std::size_t{w} + 1) * per * 64);
    std::uint64_t local = 0;
    for (std::size_t v = begin; v < end; ++v) {
      if (states_.updated_flags.test(v)) {
        states_.value[v] = states_.updated_value[v];
        ++local;
      }
    }
    applied.fetch_add(local, std::memory_order_relaxed);
  });
  if (applied.load() != global)
    throw ConsistencyError("superstep " + std::to_string(superstep_) + ": applied " + std::to_string(applied.load()) +
                           " updates but servers reported " + std::to_string(global));

  states_.prev_updated_flags.swap(states_.updated_flags);
  states_.updated_flags.clear_all();
  active_ = config_.skip_inactive_tiles ? UpdatedSet::from_flags(states_.prev_updated_flags, config_.full_scan_ratio)
                                        : UpdatedSet::everything();

  SuperstepReport report;
  report.superstep = superstep_;
  report.updated_vertex_count = global;
  report.tiles_assigned = tiles_.size();
  report.tiles_processed = processed.load();
  report.tiles_skipped = skipped.load();
  report.cache = cache_.stats().since(cache_before);
  report.bytes_broadcast = comm_.bytes_sent() - bytes_before;
  report.frames_broadcast = comm_.frames_sent() - frames_before;
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();

  ++superstep_;
  comm_.advance();
  return report;
}

RunResult Server::run(const std::function<void(const SuperstepReport&)>& after_superstep) {
  if (!initialized_) initialize();
  RunResult result;
  for (;;) {
    result.reports.push_back(run_superstep());
    if (after_superstep) after_superstep(result.reports.back());
    if (result.reports.back().updated_vertex_count == 0 || result.reports.size() >= config_.max_supersteps) break;
  }
  comm_.stop();
  result.values = states_.value;
  return result;
}

void Server::abort() noexcept { comm_.abort(); }

// ---------------------------------------------------------------------------

RunResult run_server(const Dataset& dataset, const EngineConfig& config, Transport& transport,
                     const ProgramFactory& make_program) {
  Server server(dataset, config, transport, make_program());
  try {
    return server.run();
  } catch (...) {
    server.abort();
    throw;
  }
}

RunResult run_local_cluster(const Dataset& dataset, const EngineConfig& config, const ProgramFactory& make_program,
                            const SuperstepObserver& observer) {
  config.validate();
  const std::uint16_t n = config.num_servers;
  LocalHub hub(n);
  std::vector<std::unique_ptr<Transport>> endpoints;
  std::vector<std::unique_ptr<Server>> servers;
  for (std::uint16_t r = 0; r < n; ++r) {
    endpoints.push_back(hub.endpoint(r));
    servers.push_back(std::make_unique<Server>(dataset, config, *endpoints.back(), make_program()));
  }

  RoundBarrier round(n);
  std::vector<SuperstepReport> slots(n);
  std::vector<const VertexStateArrays*> replicas;
  for (const auto& s : servers) replicas.push_back(&s->states());
  auto completion = [&] { observer(combine_reports(slots), replicas); };

  std::vector<RunResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::uint16_t r) {
    try {
      std::function<void(const SuperstepReport&)> hook;
      if (observer) {
        hook = [&, r](const SuperstepReport& rep) {
          slots[r] = rep;
          round.arrive_and_wait(completion);
        };
      }
      results[r] = servers[r]->run(hook);
    } catch (...) {
      errors[r] = std::current_exception();
      servers[r]->abort();
      round.abort();
    }
  };
  {
    std::vector<std::jthread> threads;
    for (std::uint16_t r = 1; r < n; ++r) threads.emplace_back(body, r);
    body(0);
  }

  // Prefer the root cause over the disconnects it triggered elsewhere.
  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    if (!first) first = e;
    try {
      std::rethrow_exception(e);
    } catch (const ProtocolError&) {
      first = e;
      break;
    } catch (const TransportError&) {
    } catch (const Error& err) {
      if (std::string_view(err.what()) != "cluster aborted") {
        first = e;
        break;
      }
    } catch (...) {
      first = e;
      break;
    }
  }
  if (first) std::rethrow_exception(first);

  RunResult out;
  out.values = std::move(results[0].values);
  for (std::uint16_t r = 1; r < n; ++r) {
    if (results[r].values.size() != out.values.size() ||
        (!out.values.empty() &&
         std::memcmp(results[r].values.data(), out.values.data(), out.values.size() * sizeof(double)) != 0))
      throw ConsistencyError("replica on server " + std::to_string(r) + " diverged from server 0");
    if (results[r].reports.size() != results[0].reports.size())
      throw ConsistencyError("servers ran different numbers of supersteps");
  }
  for (std::size_t s = 0; s < results[0].reports.size(); ++s) {
    std::vector<SuperstepReport> per;
    for (auto& r : results) per.push_back(r.reports[s]);
    out.reports.push_back(combine_reports(per));
  }
  return out;
}

}  // namespace tilegraph
