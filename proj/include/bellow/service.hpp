#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "bellow/jobs.hpp"
#include "bellow/store.hpp"

namespace httplib {
class Server;
}

namespace bellow {

struct ServiceConfig {
  std::filesystem::path store = "bellow-store";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  JobLimits limits;

  // BELLOW_STORE, BELLOW_HOST and BELLOW_PORT override the defaults.
  static ServiceConfig from_env();
};

// JSON-over-HTTP front end. Routes are documented in docs/api.md.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  // Returns the bound port, or -1 on failure.
  int bind();
  // Blocks until stop(). Call bind() first.
  bool serve();
  void stop();

  ProjectStore& store() { return store_; }
  JobManager& jobs() { return jobs_; }

 private:
  void routes();

  ServiceConfig config_;
  ProjectStore store_;
  JobManager jobs_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace bellow
