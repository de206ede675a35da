#include "bellow/jobs.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "bellow/error.hpp"

namespace bellow {

const char* to_string(JobKind k) { return k == JobKind::train ? "train" : "optimize"; }

const char* to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "";
}

class JobManager::Context : public JobContext {
 public:
  Context(JobManager& m, std::string id) : m_(m), id_(std::move(id)) {}

  void progress(double fraction) override {
    std::lock_guard lock(m_.mutex_);
    auto& r = m_.jobs_.at(id_).record;
    r.progress = std::clamp(fraction, r.progress, 1.0);
  }

  void log(const std::string& line) override {
    std::lock_guard lock(m_.mutex_);
    auto& log = m_.jobs_.at(id_).record.log;
    if (log.size() == kMaxLogLines) log.erase(log.begin());
    log.push_back(line);
  }

 private:
  JobManager& m_;
  std::string id_;
};

JobManager::JobManager(JobLimits limits) {
  // Random per-process prefix keeps ids unique across restarts.
  std::random_device rd;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
  nonce_ = buf;
  queues_[JobKind::train];
  queues_[JobKind::optimize];
  for (int i = 0; i < std::max(1, limits.train); ++i) workers_.emplace_back(&JobManager::worker, this, JobKind::train);
  for (int i = 0; i < std::max(1, limits.optimize); ++i) {
    workers_.emplace_back(&JobManager::worker, this, JobKind::optimize);
  }
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  for (auto& w : workers_) w.join();
}

std::string JobManager::submit(JobKind kind, JobWork work) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    char buf[40];
    std::snprintf(buf, sizeof buf, "job-%s-%06llu", nonce_.c_str(), static_cast<unsigned long long>(++counter_));
    id = buf;
    Entry e;
    e.record.id = id;
    e.record.kind = kind;
    e.work = std::move(work);
    jobs_.emplace(id, std::move(e));
    queues_[kind].push_back(id);
  }
  changed_.notify_all();
  return id;
}

std::optional<JobRecord> JobManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second.record;
}

std::vector<JobRecord> JobManager::list() const {
  std::lock_guard lock(mutex_);
  std::vector<JobRecord> out;
  for (const auto& [id, e] : jobs_) out.push_back(e.record);
  return out;
}

std::optional<JobRecord> JobManager::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  changed_.wait_for(lock, timeout, [&] { return it->second.record.terminal(); });
  return it->second.record;
}

void JobManager::advance(Entry& e, JobState next) {
  if (static_cast<int>(next) <= static_cast<int>(e.record.state) || e.record.terminal()) {
    throw std::logic_error(std::string("job state cannot move from ") + to_string(e.record.state) + " to " +
                           to_string(next));
  }
  e.record.state = next;
}

void JobManager::worker(JobKind kind) {
  for (;;) {
    std::string id;
    JobWork work;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queues_[kind].empty(); });
      if (queues_[kind].empty()) return;  // stopping
      id = queues_[kind].front();
      queues_[kind].pop_front();
      Entry& e = jobs_.at(id);
      advance(e, JobState::running);
      work = std::move(e.work);
    }
    changed_.notify_all();

    Context ctx(*this, id);
    std::optional<std::string> result;
    JobError error;
    try {
      result = work(ctx);
    } catch (const ValidationError& ex) {
      error = {ex.code(), ex.what(), ex.violations()};
    } catch (const Error& ex) {
      error = {ex.code(), ex.what(), {}};
    } catch (const std::exception& ex) {
      error = {"internal", ex.what(), {}};
    }
    {
      std::lock_guard lock(mutex_);
      Entry& e = jobs_.at(id);
      if (result) {
        e.record.result = *result;
        e.record.progress = 1.0;
        advance(e, JobState::done);
      } else {
        e.record.error = error;
        advance(e, JobState::failed);
      }
    }
    changed_.notify_all();
  }
}

}  // namespace bellow
