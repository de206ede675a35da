#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace bellow {

enum class JobKind { train, optimize };
enum class JobState { queued, running, done, failed };

const char* to_string(JobKind k);
const char* to_string(JobState s);

struct JobError {
  std::string code;
  std::string message;
  std::vector<std::string> violations;
};

struct JobRecord {
  std::string id;
  JobKind kind = JobKind::train;
  JobState state = JobState::queued;
  double progress = 0.0;  // [0, 1]
  std::optional<std::string> result;  // store hash, present once done
  std::optional<JobError> error;      // present once failed
  std::vector<std::string> log;

  bool terminal() const { return state == JobState::done || state == JobState::failed; }
};

// Handed to a running job for progress and log output.
class JobContext {
 public:
  virtual ~JobContext() = default;
  virtual void progress(double fraction) = 0;
  virtual void log(const std::string& line) = 0;
};

// Returns the result reference stored on success.
using JobWork = std::function<std::string(JobContext&)>;

struct JobLimits {
  int train = 1;
  int optimize = 1;
};

// FIFO queue per kind, with a fixed number of worker threads each. States
// only move forward: queued -> running -> done | failed.
class JobManager {
 public:
  explicit JobManager(JobLimits limits = {});
  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string submit(JobKind kind, JobWork work);
  std::optional<JobRecord> get(const std::string& id) const;
  std::vector<JobRecord> list() const;
  // Blocks until the job is terminal or the timeout elapses.
  std::optional<JobRecord> wait(const std::string& id, std::chrono::milliseconds timeout) const;

  static constexpr std::size_t kMaxLogLines = 500;

 private:
  struct Entry {
    JobRecord record;
    JobWork work;
  };
  class Context;

  void worker(JobKind kind);
  void advance(Entry& e, JobState next);

  std::string nonce_;
  std::uint64_t counter_ = 0;
  std::map<std::string, Entry> jobs_;
  std::map<JobKind, std::deque<std::string>> queues_;
  bool stopping_ = false;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::vector<std::thread> workers_;
};

}  // namespace bellow
