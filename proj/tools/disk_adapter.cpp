// Reference segmenter adapter: reads JSON-lines requests on stdin and answers
// with the union of disks around positive clicks minus disks around negative
// clicks. Useful as a template for wrapping a real model and for tests.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rclicks/rle.hpp"
#include "rclicks/segmenter.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Disk-model segmenter speaking the rclicks adapter protocol"};
  int radius = 10;
  int fail_on = 0;
  int exit_after = 0;
  app.add_option("--radius", radius, "Disk radius in pixels")->check(CLI::NonNegativeNumber);
  app.add_option("--fail-on", fail_on, "Answer request N (1-based) with an error");
  app.add_option("--exit-after", exit_after, "Exit without answering after N requests");
  CLI11_PARSE(app, argc, argv);

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (exit_after > 0 && served >= exit_after) return 0;
    ++served;
    nlohmann::ordered_json resp;
    try {
      const auto req = nlohmann::json::parse(line);
      resp["id"] = req.at("id");
      if (served == fail_on) {
        resp["error"] = "requested failure";
      } else {
        std::vector<rclicks::Click> clicks;
        for (const auto& c : req.at("clicks")) {
          clicks.push_back({c.at("x").get<int>(), c.at("y").get<int>(),
                            c.at("positive").get<bool>() ? rclicks::Polarity::kPositive : rclicks::Polarity::kNegative});
        }
        const auto mask = rclicks::disk_mask(clicks, req.at("width").get<int>(), req.at("height").get<int>(), radius);
        resp["mask"] = rclicks::rle_encode(mask);
      }
    } catch (const std::exception& e) {
      if (!resp.contains("id")) resp["id"] = nullptr;
      resp["error"] = e.what();
    }
    std::cout << resp.dump() << '\n' << std::flush;
  }
  return 0;
}
