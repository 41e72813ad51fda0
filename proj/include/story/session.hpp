// Long-lived design sessions.
//
// Each session owns one archive and one worker thread. Every request is
// turned into a command that the worker runs between generations, so the
// archive is never touched concurrently. Readers get copies.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "story/archive.hpp"
#include "story/evaluation.hpp"
#include "story/graph.hpp"

namespace story {

enum class SessionStatus { Running, Paused };
std::string_view status_name(SessionStatus s) noexcept;

/// The working graph together with its own evaluation.
struct TargetAck {
  std::uint64_t generation = 0;
  NarrativeGraph target = default_graph();
  Evaluation evaluation;
  nlohmann::ordered_json patterns;  // counts by pattern kind
  std::string digest;
};

nlohmann::ordered_json ack_to_json(const TargetAck& ack);

struct EliteView {
  int x = 0;
  int y = 0;
  Dimension dim_x = Dimension::Step;
  Dimension dim_y = Dimension::Interestingness;
  NarrativeGraph phenotype = default_graph();
  Evaluation evaluation;
  nlohmann::ordered_json patterns;
  std::string digest;
  Recipe recipe;
};

nlohmann::ordered_json elite_to_json(const EliteView& view);

struct SessionInfo {
  std::string id;
  SessionStatus status = SessionStatus::Running;
  std::uint64_t generation = 0;
  std::int64_t created = 0;  // unix seconds
  DimensionSpec dims;
  std::optional<LevelConstraints> constraints;
  std::size_t uniques = 0;
  std::size_t individuals = 0;
};

nlohmann::ordered_json info_to_json(const SessionInfo& info);

struct SessionOptions {
  std::optional<NarrativeGraph> graph;
  std::optional<LevelConstraints> constraints;
  std::optional<DimensionSpec> dims;
  std::optional<std::uint64_t> seed;
  std::size_t initial_population = 1000;
  std::size_t offspring_per_generation = 100;
  bool start_paused = false;
};

/// Parses the optional body of a create request:
/// { "graph"?, "constraints"?, "dims"?, "seed"?, "initial_population"?,
///   "offspring_per_generation"?, "paused"? }
SessionOptions session_options_from_json(const nlohmann::json& doc);

class Session {
 public:
  using Clock = std::chrono::steady_clock;

  Session(std::string id, const SessionOptions& options, std::uint64_t default_seed);
  /// Restores from a document produced by checkpoint().
  Session(const nlohmann::json& checkpoint);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }

  TargetAck target();
  /// Returns once the injection has been applied.
  TargetAck update_target(NarrativeGraph g);
  Snapshot grid(Dimension x, Dimension y);
  Snapshot grid();
  EliteView elite(int i, int j, std::optional<std::pair<Dimension, Dimension>> proj = {});
  TargetAck adopt(int i, int j, std::optional<std::pair<Dimension, Dimension>> proj = {});
  void set_dimensions(DimensionSpec dims);
  void set_constraints(std::optional<LevelConstraints> constraints);
  void pause();
  void resume();
  SessionInfo info();
  nlohmann::ordered_json checkpoint();
  static nlohmann::ordered_json checkpoint_of(const std::string& id, std::int64_t created,
                                              bool paused, const Archive& a);

  /// Latest snapshot published after a completed generation, with its
  /// sequence number. Blocks until one newer than `after` exists or the
  /// timeout passes.
  std::optional<std::pair<std::uint64_t, Snapshot>> wait_published(
      std::uint64_t after, std::chrono::milliseconds timeout);

  /// Minimum pause between generations; zero runs flat out.
  void set_step_delay(std::chrono::milliseconds d);

  /// Called from the worker with a fresh checkpoint every 50 generations.
  void set_checkpoint_hook(std::function<void(const nlohmann::ordered_json&)> hook);

  void stop();

 private:
  using Command = std::function<void(Archive&)>;

  template <typename F>
  auto call(F&& f) -> decltype(f(std::declval<Archive&>()));

  void start();
  void loop();
  void publish(const Archive& a);
  TargetAck ack_for(const Archive& a) const;
  std::pair<Dimension, Dimension> default_projection(const Archive& a) const;

  std::string id_;
  std::int64_t created_ = 0;
  std::unique_ptr<Archive> archive_;  // touched only by the worker once started

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Command> queue_;
  bool paused_ = false;
  bool stopping_ = false;
  std::chrono::milliseconds step_delay_{0};
  std::function<void(const nlohmann::ordered_json&)> checkpoint_hook_;

  std::mutex pub_mu_;
  std::condition_variable pub_cv_;
  std::uint64_t pub_seq_ = 0;
  std::optional<Snapshot> published_;

  std::thread worker_;
};

class SessionManager {
 public:
  /// With a state directory, existing session files are restored and every
  /// session is written back on persist() and on destruction.
  explicit SessionManager(std::optional<std::filesystem::path> state_dir = {});
  ~SessionManager();

  std::shared_ptr<Session> create(const SessionOptions& options);
  std::shared_ptr<Session> get(const std::string& id) const;  // throws NotFound
  std::vector<std::string> ids() const;
  void persist();
  void persist(Session& s);

  void set_step_delay(std::chrono::milliseconds d);

 private:
  std::optional<std::filesystem::path> state_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_ = 1;
  std::chrono::milliseconds step_delay_{0};
};

}  // namespace story
