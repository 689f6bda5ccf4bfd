#pragma once

// HTTP binding of CollectStore.
//
//   POST /session               {"device": "pc"|"mobile", "mode"?: str, "participant"?: str}
//   GET  /session/:id/task      TaskView JSON, or {"done": true, "batch_valid": bool|null}
//   GET  /task/:id/image        PNG
//   GET  /task/:id/target       PNG, or {"text": str} in text mode; ?mode= overrides
//   POST /task/:id/click        {"x", "y", "timeline": {"image_shown", "target_shown",
//                                "locked_shown", "clicked"}}
//   GET  /export.csv            text/csv
//
// Errors are {"error": kind, "message": str} with 400/404/409/422 statuses.

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "rclicks/collect.hpp"

namespace rclicks {

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kMissingDescription: return 422;
    default: return 400;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_json(res, http_status(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    send_json(res, 400, {{"error", "invalid-parameter"}, {"message", e.what()}});
  }
}

inline nlohmann::ordered_json to_json(const TaskView& t) {
  return {{"task_id", t.task_id},
          {"session_id", t.session_id},
          {"index", t.index},
          {"width", t.width},
          {"height", t.height},
          {"mode", to_string(t.mode)},
          {"timings", {{"image_ms", t.timings.image_ms}, {"target_ms", t.timings.target_ms},
                       {"locked_ms", t.timings.locked_ms}}}};
}

}  // namespace detail

inline void install_collect_routes(httplib::Server& server, CollectStore& store) {
  using detail::guarded;
  using detail::send_json;

  server.Post("/session", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body.empty() ? "{}" : req.body);
      const auto device_name = body.value("device", std::string("pc"));
      if (device_name != "pc" && device_name != "mobile") fail(ErrorKind::kInvalidParameter, "device must be pc or mobile");
      const auto mode = parse_display_mode(body.value("mode", std::string("cutout")));
      const auto id = store.create_session(parse_device(device_name), mode, body.value("participant", std::string()));
      send_json(res, 201, {{"session_id", id}, {"device", device_name}, {"mode", to_string(mode)},
                           {"batch_size", kBatchSize}});
    });
  });

  server.Get("/session/:id/task", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& sid = req.path_params.at("id");
      const auto task = store.next_task(sid);
      if (!task) {
        const auto valid = store.batch_valid(sid);
        send_json(res, 200, {{"done", true}, {"batch_valid", valid ? nlohmann::ordered_json(*valid) : nullptr}});
        return;
      }
      send_json(res, 200, detail::to_json(*task));
    });
  });

  server.Get("/task/:id/image", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& inst = store.task_instance(req.path_params.at("id"));
      const auto png = encode_png(load_rgb(inst.image));
      res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    });
  });

  server.Get("/task/:id/target", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& tid = req.path_params.at("id");
      const auto view = store.task(tid);
      const auto mode = req.has_param("mode") ? parse_display_mode(req.get_param_value("mode")) : view.mode;
      const auto& inst = store.task_instance(tid);
      const auto image = mode == DisplayMode::kText ? RgbImage(1, 1) : load_rgb(inst.image);
      const auto target = render_target(image, mode == DisplayMode::kText ? BinaryMask(1, 1) : inst.mask,
                                        inst.description, mode);
      if (const auto* text = std::get_if<std::string>(&target)) {
        send_json(res, 200, {{"text", *text}});
        return;
      }
      const auto& png = std::get<std::vector<std::uint8_t>>(target);
      res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    });
  });

  server.Post("/task/:id/click", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      const auto& tl = body.at("timeline");
      const ClientTimeline timeline{tl.at("image_shown").get<std::int64_t>(), tl.at("target_shown").get<std::int64_t>(),
                                    tl.at("locked_shown").get<std::int64_t>(), tl.at("clicked").get<std::int64_t>()};
      const auto out = store.submit_click(req.path_params.at("id"), body.at("x").get<int>(), body.at("y").get<int>(),
                                          timeline);
      nlohmann::ordered_json j{{"accepted", out.accepted}, {"valid", out.valid}};
      if (!out.reason.empty()) j["reason"] = out.reason;
      j["batch_complete"] = out.batch_complete;
      j["batch_valid"] = out.batch_valid ? nlohmann::ordered_json(*out.batch_valid) : nullptr;
      send_json(res, 200, j);
    });
  });

  server.Get("/export.csv", [&store](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { res.set_content(store.export_csv(), "text/csv"); });
  });
}

}  // namespace rclicks
