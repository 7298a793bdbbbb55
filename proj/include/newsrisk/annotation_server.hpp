#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <thread>

#include "json.hpp"
#include "newsrisk/annotation_store.hpp"

namespace httplib {
class Server;
}

namespace newsrisk {

struct ServerConfig {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  /// Default for POST /enqueue when the body omits calibration_count.
  std::size_t calibration_count = 100;
  /// Served at / when non-empty.
  std::string static_dir;
};

/// Factor codes, names and descriptions in canonical order, plus the record
/// enumerations; served at GET /schema.
nlohmann::json annotation_schema();

/// HTTP front end over an AnnotationStore. Error bodies are {"error": message}
/// with 400 validation, 403 unknown assignment, 404 unknown resource and 409
/// precondition failures.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerConfig config);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds the listening socket; returns the bound port. Throws IoError.
  int bind();
  /// Serves on the calling thread until stop(). Binds first if needed.
  void serve();
  /// Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();

  int port() const { return port_; }

 private:
  void install_routes();

  AnnotationStore& store_;
  ServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace newsrisk
