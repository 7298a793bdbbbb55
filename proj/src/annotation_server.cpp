#include "newsrisk/annotation_server.hpp"

#include <sstream>

#include "httplib.h"
#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

json annotation_schema() {
  json factors = json::array();
  for (auto f : kAllFactors) {
    factors.push_back({{"index", index_of(f)},
                       {"code", code(f)},
                       {"name", display_name(f)},
                       {"short_name", short_name(f)},
                       {"description", description(f)}});
  }
  return {{"factors", factors},
          {"statuses", {"draft", "submitted", "rejected"}},
          {"batches", {"calibration", "solo"}},
          {"gold_sources", {"adjudicated", "single-annotator"}}};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what());
  }
}

RiskLabelSet labels_field(const json& body) {
  const auto it = body.find("labels");
  if (it == body.end()) return {};
  if (!it->is_array()) throw ValidationError("'labels' must be an array of factor codes");
  try {
    return RiskLabelSet::from_codes(it->get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad labels: ") + e.what());
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
}

std::string string_field(const json& body, const char* key, bool required = true) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (required) throw ValidationError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

// Maps the error hierarchy onto status codes.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const AuthorizationError& e) {
      send_json(res, 403, {{"error", e.what()}});
    } catch (const NotFoundError& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const PreconditionError& e) {
      send_json(res, 409, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const ParseError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerConfig config)
    : store_(store), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::install_routes() {
  auto& svr = *server_;

  svr.Get("/schema", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, annotation_schema());
          }));

  svr.Get(R"(/queue/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string annotator = req.matches[1];
            json items = json::array();
            for (const auto& a : store_.queue(annotator)) {
              items.push_back({{"sample_id", a.sample_id}, {"batch", batch_name(a.batch)}});
            }
            send_json(res, 200, {{"annotator_id", annotator}, {"remaining", items.size()}, {"assignments", items}});
          }));

  svr.Get(R"(/samples/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto s = store_.sample(id);
            if (!s) throw NotFoundError("unknown sample '" + id + "'");
            send_json(res, 200, to_json(*s));
          }));

  svr.Post("/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             const std::string header = req.get_header_value("X-Annotator-Id");
             const std::string field = string_field(body, "annotator_id", false);
             if (!header.empty() && !field.empty() && header != field) {
               throw ValidationError("X-Annotator-Id and annotator_id disagree");
             }
             if (field.empty()) body["annotator_id"] = header;
             if (body.contains("labels") && !body["labels"].is_array()) {
               throw ValidationError("'labels' must be an array of factor codes");
             }
             AnnotationRecord record = record_from_json(body);
             send_json(res, 200, to_json(store_.submit(std::move(record))));
           }));

  svr.Get(R"(/disagreements/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(store_.disagreements(req.matches[1])));
          }));

  svr.Post("/adjudications", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             std::string adjudicator = string_field(body, "adjudicator", false);
             if (adjudicator.empty()) adjudicator = req.get_header_value("X-Annotator-Id");
             const auto gold = store_.adjudicate(string_field(body, "sample_id"), labels_field(body), adjudicator);
             send_json(res, 200, to_json(gold));
           }));

  svr.Post("/flags", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             std::string by = string_field(body, "flagged_by", false);
             if (by.empty()) by = req.get_header_value("X-Annotator-Id");
             const auto f = store_.flag(string_field(body, "sample_id"), by, string_field(body, "reason", false));
             send_json(res, 200, {{"sample_id", f.sample_id}, {"flagged_by", f.flagged_by}, {"reason", f.reason}});
           }));

  svr.Post("/enqueue", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             std::vector<Sample> samples;
             std::vector<std::string> annotators;
             std::size_t calibration = config_.calibration_count;
             try {
               for (const auto& s : body.at("samples")) samples.push_back(sample_from_json(s));
               annotators = body.at("annotators").get<std::vector<std::string>>();
               if (body.contains("calibration_count")) calibration = body["calibration_count"].get<std::size_t>();
             } catch (const json::exception& e) {
               throw ValidationError(std::string("malformed enqueue request: ") + e.what());
             }
             const auto assignments = store_.enqueue(samples, annotators, calibration);
             std::size_t cal = 0;
             for (const auto& a : assignments) cal += a.batch == Batch::Calibration ? 1 : 0;
             send_json(res, 200,
                       {{"assignments", assignments.size()}, {"calibration", cal}, {"solo", assignments.size() - cal}});
           }));

  svr.Get("/stats/agreement", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, to_json(store_.agreement_stats()));
          }));

  svr.Get("/export/gold", guarded([this](const httplib::Request&, httplib::Response& res) {
            const auto gold = store_.export_gold();
            std::ostringstream out;
            write_gold(out, gold);
            res.status = 200;
            res.set_header("X-Excluded-Calibration", std::to_string(gold.excluded_calibration));
            res.set_header("X-Excluded-Rejected", std::to_string(gold.excluded_rejected));
            res.set_header("X-Unlabeled", std::to_string(gold.unlabeled));
            res.set_content(out.str(), "application/x-ndjson");
          }));

  if (!config_.static_dir.empty() && !svr.set_mount_point("/", config_.static_dir)) {
    throw IoError("static directory '" + config_.static_dir + "' does not exist");
  }
}

int AnnotationServer::bind() {
  if (port_ >= 0) return port_;
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0) throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  return port_;
}

void AnnotationServer::serve() {
  bind();
  server_->listen_after_bind();
}

int AnnotationServer::start() {
  const int port = bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void AnnotationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace newsrisk
