#include "story/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "story/error.hpp"
#include "story/graph_io.hpp"
#include "story/grammar_io.hpp"
#include "story/patterns.hpp"

namespace story {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kPersistEvery = 50;
constexpr const char* kSessionFormat = "story-session/1";

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string_view status_name(SessionStatus s) noexcept {
  return s == SessionStatus::Running ? "running" : "paused";
}

ojson ack_to_json(const TargetAck& ack) {
  return {{"generation", ack.generation},
          {"target", graph_to_json(ack.target)},
          {"digest", ack.digest},
          {"evaluation", evaluation_to_json(ack.evaluation)},
          {"patterns", ack.patterns}};
}

ojson elite_to_json(const EliteView& v) {
  return {{"cell", {v.x, v.y}},
          {"dims", {dimension_id(v.dim_x), dimension_id(v.dim_y)}},
          {"digest", v.digest},
          {"phenotype", graph_to_json(v.phenotype)},
          {"fitness", v.evaluation.fitness},
          {"coherence", v.evaluation.coherence},
          {"interestingness", v.evaluation.dimension(Dimension::Interestingness)},
          {"evaluation", evaluation_to_json(v.evaluation)},
          {"patterns", v.patterns},
          {"recipe", recipe_to_json(v.recipe)}};
}

ojson info_to_json(const SessionInfo& info) {
  return {{"id", info.id},
          {"status", status_name(info.status)},
          {"generation", info.generation},
          {"created", info.created},
          {"dims", dimensions_to_json(info.dims)},
          {"constraints",
           info.constraints ? constraints_to_json(*info.constraints) : ojson(nullptr)},
          {"uniques", info.uniques},
          {"individuals", info.individuals}};
}

SessionOptions session_options_from_json(const nlohmann::json& doc) {
  SessionOptions o;
  if (doc.is_null()) return o;
  if (!doc.is_object()) throw ParseError("", "expected an object");
  auto located = [](const std::string& where, auto&& f) {
    try {
      return f();
    } catch (const ParseError& e) {
      throw ParseError(where + e.location(), e.what());
    }
  };
  if (auto it = doc.find("graph"); it != doc.end() && !it->is_null())
    o.graph = located("/graph", [&] { return graph_from_json(*it); });
  if (auto it = doc.find("constraints"); it != doc.end() && !it->is_null())
    o.constraints = located("/constraints", [&] { return constraints_from_json(*it); });
  if (auto it = doc.find("dims"); it != doc.end() && !it->is_null())
    o.dims = located("/dims", [&] { return dimensions_from_json(*it); });
  auto count = [&](const char* key, std::size_t& out) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_number_unsigned() || it->get<std::size_t>() < 1)
      throw ParseError(std::string("/") + key, "expected a positive integer");
    out = it->get<std::size_t>();
  };
  count("initial_population", o.initial_population);
  count("offspring_per_generation", o.offspring_per_generation);
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw ParseError("/seed", "expected a non-negative integer");
    o.seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("paused"); it != doc.end()) {
    if (!it->is_boolean()) throw ParseError("/paused", "expected a boolean");
    o.start_paused = it->get<bool>();
  }
  return o;
}

Session::Session(std::string id, const SessionOptions& options, std::uint64_t default_seed)
    : id_(std::move(id)), created_(unix_now()), paused_(options.start_paused) {
  ArchiveConfig cfg;
  if (options.dims) cfg.dims = *options.dims;
  cfg.constraints = options.constraints;
  cfg.seed = options.seed.value_or(default_seed);
  cfg.initial_population = options.initial_population;
  cfg.offspring_per_generation = options.offspring_per_generation;
  archive_ = std::make_unique<Archive>(cfg, options.graph.value_or(default_graph()));
  start();
}

Session::Session(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kSessionFormat)
    throw ParseError("/format", std::string("expected '") + kSessionFormat + "'");
  id_ = doc.at("id").get<std::string>();
  created_ = doc.at("created").get<std::int64_t>();
  paused_ = doc.at("status").get<std::string>() == "paused";
  archive_ = std::make_unique<Archive>(Archive::from_json(doc.at("archive")));
  start();
}

Session::~Session() { stop(); }

void Session::start() {
  publish(*archive_);
  worker_ = std::thread([this] { loop(); });
}

void Session::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

template <typename F>
auto Session::call(F&& f) -> decltype(f(std::declval<Archive&>())) {
  using R = decltype(f(std::declval<Archive&>()));
  auto task = std::make_shared<std::packaged_task<R(Archive&)>>(std::forward<F>(f));
  auto result = task->get_future();
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw Error("session " + id_ + " is stopped");
    queue_.push_back([task](Archive& a) { (*task)(a); });
  }
  cv_.notify_all();
  return result.get();
}

void Session::loop() {
  for (;;) {
    std::deque<Command> batch;
    bool step = false;
    std::chrono::milliseconds delay{0};
    std::function<void(const ojson&)> hook;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty() || !paused_; });
      if (stopping_) {
        batch.swap(queue_);
        lock.unlock();
        // Drain so no caller waits forever on a dropped command.
        for (auto& c : batch) c(*archive_);
        return;
      }
      batch.swap(queue_);
      step = !paused_;
      delay = step_delay_;
      hook = checkpoint_hook_;
    }
    for (auto& c : batch) c(*archive_);
    if (!step) continue;

    archive_->step_generation();
    publish(*archive_);
    if (hook && archive_->generation() % kPersistEvery == 0) {
      hook(checkpoint_of(id_, created_, false, *archive_));
    }
    if (delay.count() > 0) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, delay, [&] { return stopping_ || !queue_.empty(); });
    }
  }
}

std::pair<Dimension, Dimension> Session::default_projection(const Archive& a) const {
  const auto& sel = a.config().dims.selected;
  Dimension x = sel[0];
  Dimension y = sel.size() > 1 ? sel[1]
                               : (x == Dimension::Step ? Dimension::Interestingness
                                                       : Dimension::Step);
  return {x, y};
}

void Session::publish(const Archive& a) {
  auto [x, y] = default_projection(a);
  Snapshot s = a.snapshot(x, y);
  {
    std::lock_guard lock(pub_mu_);
    published_ = std::move(s);
    ++pub_seq_;
  }
  pub_cv_.notify_all();
}

std::optional<std::pair<std::uint64_t, Snapshot>> Session::wait_published(
    std::uint64_t after, std::chrono::milliseconds timeout) {
  std::unique_lock lock(pub_mu_);
  if (!pub_cv_.wait_for(lock, timeout, [&] { return pub_seq_ > after; }))
    return std::nullopt;
  return std::make_pair(pub_seq_, *published_);
}

TargetAck Session::ack_for(const Archive& a) const {
  TargetAck ack;
  ack.generation = a.generation();
  ack.target = a.target();
  auto patterns = detect_patterns(ack.target);
  ack.evaluation = evaluate(ack.target, a.context());
  ack.patterns = pattern_summary(patterns);
  ack.digest = canonical_hash(ack.target);
  return ack;
}

TargetAck Session::target() {
  return call([this](Archive& a) { return ack_for(a); });
}

TargetAck Session::update_target(NarrativeGraph g) {
  return call([this, g = std::move(g)](Archive& a) mutable {
    a.inject_target(std::move(g));
    publish(a);
    return ack_for(a);
  });
}

Snapshot Session::grid(Dimension x, Dimension y) {
  return call([x, y](Archive& a) { return a.snapshot(x, y); });
}

Snapshot Session::grid() {
  return call([this](Archive& a) {
    auto [x, y] = default_projection(a);
    return a.snapshot(x, y);
  });
}

EliteView Session::elite(int i, int j, std::optional<std::pair<Dimension, Dimension>> proj) {
  return call([this, i, j, proj](Archive& a) {
    auto [x, y] = proj.value_or(default_projection(a));
    const Individual* ind = a.projected_elite(x, y, i, j);
    if (!ind) {
      throw NoElite("cell [" + std::to_string(i) + "," + std::to_string(j) +
                    "] holds no feasible elite");
    }
    EliteView v;
    v.x = i;
    v.y = j;
    v.dim_x = x;
    v.dim_y = y;
    v.phenotype = ind->phenotype;
    v.evaluation = evaluate(v.phenotype, a.context());
    v.patterns = pattern_summary(detect_patterns(v.phenotype));
    v.digest = canonical_hash(v.phenotype);
    v.recipe = ind->best_recipe;
    return v;
  });
}

TargetAck Session::adopt(int i, int j, std::optional<std::pair<Dimension, Dimension>> proj) {
  return call([this, i, j, proj](Archive& a) {
    auto [x, y] = proj.value_or(default_projection(a));
    const Individual* ind = a.projected_elite(x, y, i, j);
    if (!ind) {
      throw NoElite("cell [" + std::to_string(i) + "," + std::to_string(j) +
                    "] holds no feasible elite");
    }
    a.inject_target(ind->phenotype);
    publish(a);
    return ack_for(a);
  });
}

void Session::set_dimensions(DimensionSpec dims) {
  dims.validate();
  call([this, dims = std::move(dims)](Archive& a) mutable {
    a.set_dimensions(std::move(dims));
    publish(a);
  });
}

void Session::set_constraints(std::optional<LevelConstraints> constraints) {
  if (constraints) constraints->validate();
  call([this, constraints](Archive& a) {
    a.set_constraints(constraints);
    publish(a);
  });
}

void Session::pause() {
  {
    std::lock_guard lock(mu_);
    paused_ = true;
  }
  // Wait for the worker to reach a command boundary; no step follows it.
  call([](Archive&) {});
}

void Session::resume() {
  {
    std::lock_guard lock(mu_);
    paused_ = false;
  }
  cv_.notify_all();
}

void Session::set_step_delay(std::chrono::milliseconds d) {
  {
    std::lock_guard lock(mu_);
    step_delay_ = d;
  }
  cv_.notify_all();
}

void Session::set_checkpoint_hook(std::function<void(const ojson&)> hook) {
  std::lock_guard lock(mu_);
  checkpoint_hook_ = std::move(hook);
}

SessionInfo Session::info() {
  bool paused;
  {
    std::lock_guard lock(mu_);
    paused = paused_;
  }
  return call([this, paused](Archive& a) {
    SessionInfo info;
    info.id = id_;
    info.status = paused ? SessionStatus::Paused : SessionStatus::Running;
    info.generation = a.generation();
    info.created = created_;
    info.dims = a.config().dims;
    info.constraints = a.config().constraints;
    info.uniques = a.uniques();
    info.individuals = a.individual_count();
    return info;
  });
}

ojson Session::checkpoint_of(const std::string& id, std::int64_t created, bool paused,
                             const Archive& a) {
  return {{"format", kSessionFormat},
          {"id", id},
          {"created", created},
          {"status", paused ? "paused" : "running"},
          {"archive", a.to_json()}};
}

ojson Session::checkpoint() {
  bool paused;
  {
    std::lock_guard lock(mu_);
    paused = paused_;
  }
  return call([this, paused](Archive& a) { return checkpoint_of(id_, created_, paused, a); });
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << content;
    if (!out.flush()) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

fs::path session_file(const fs::path& dir, const std::string& id) {
  return dir / (id + ".session.json");
}

}  // namespace

SessionManager::SessionManager(std::optional<fs::path> state_dir)
    : state_dir_(std::move(state_dir)) {
  if (!state_dir_) return;
  std::error_code ec;
  fs::create_directories(*state_dir_, ec);
  if (ec) throw IoError(state_dir_->string() + ": " + ec.message());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(*state_dir_)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 13 && name.ends_with(".session.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), e.what());
    }
    auto s = std::make_shared<Session>(doc);
    const auto& id = s->id();
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_ = std::max<std::uint64_t>(next_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    auto dir = *state_dir_;
    s->set_checkpoint_hook([dir, id](const ojson& cp) {
      write_atomic(session_file(dir, id), cp.dump());
    });
    sessions_.emplace(id, std::move(s));
  }
}

SessionManager::~SessionManager() {
  try {
    persist();
  } catch (const std::exception&) {
    // Shutdown must not throw; the periodic checkpoints remain on disk.
  }
  std::lock_guard lock(mu_);
  for (auto& [id, s] : sessions_) s->stop();
}

std::shared_ptr<Session> SessionManager::create(const SessionOptions& options) {
  std::uint64_t k;
  {
    std::lock_guard lock(mu_);
    k = next_++;
  }
  const std::string id = "s" + std::to_string(k);
  auto s = std::make_shared<Session>(id, options, k);
  {
    std::lock_guard lock(mu_);
    if (step_delay_.count() > 0) s->set_step_delay(step_delay_);
    if (state_dir_) {
      auto dir = *state_dir_;
      s->set_checkpoint_hook([dir, id](const ojson& cp) {
        write_atomic(session_file(dir, id), cp.dump());
      });
    }
    sessions_.emplace(id, s);
  }
  if (state_dir_) persist(*s);
  return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionManager::persist(Session& s) {
  if (!state_dir_) return;
  write_atomic(session_file(*state_dir_, s.id()), s.checkpoint().dump());
}

void SessionManager::persist() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) persist(*s);
}

void SessionManager::set_step_delay(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  step_delay_ = d;
  for (auto& [id, s] : sessions_) s->set_step_delay(d);
}

}  // namespace story
