// Stand-in quality evaluator for exercising the remote-provider wire protocol.
// Speaks POST /score {"image": "<base64 png>"} -> {"score": <float>}.
//
// Modes:
//   constant  always returns --value
//   luma      mean luminance * 4 + 1 (brighter image -> higher score)
//   proxy     the built-in no-reference score of the decoded image
//   error500  always responds 500
//   malformed responds 200 with a non-numeric score
//   timeout   never responds (sleeps past any sane client timeout)

#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "toolseq/raster.hpp"
#include "toolseq/reward.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"mock image-quality scorer"};
  int port = 0;  // 0 = pick any free port
  std::string mode = "constant";
  double value = 3.0;
  app.add_option("--port", port, "port to bind (0 = any free port)");
  app.add_option("--mode", mode, "constant|luma|proxy|error500|malformed|timeout")
      ->check(CLI::IsMember({"constant", "luma", "proxy", "error500", "malformed", "timeout"}));
  app.add_option("--value", value, "score returned in constant mode");
  CLI11_PARSE(app, argc, argv);

  auto proxy = toolseq::proxy_nr_provider();

  httplib::Server srv;
  srv.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    if (mode == "error500") {
      res.status = 500;
      return;
    }
    if (mode == "malformed") {
      res.set_content("{\"score\": \"great\"}", "application/json");
      return;
    }
    if (mode == "timeout") {
      std::this_thread::sleep_for(std::chrono::seconds(3600));
      return;
    }
    try {
      double score = value;
      if (mode == "luma" || mode == "proxy") {
        json body = json::parse(req.body);
        toolseq::Raster img = toolseq::decode_png(
            toolseq::base64_decode(body.at("image").get<std::string>()));
        if (mode == "luma") {
          auto l = toolseq::luminance(img);
          double m = 0.0;
          for (double v : l) m += v;
          score = m / static_cast<double>(l.size()) * 4.0 + 1.0;
        } else {
          score = proxy->score(img);
        }
      }
      res.set_content(json{{"score", score}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  if (port == 0) {
    port = srv.bind_to_any_port("127.0.0.1");
  } else if (!srv.bind_to_port("127.0.0.1", port)) {
    std::cerr << "cannot bind port " << port << "\n";
    return 2;
  }
  std::cout << "listening on http://127.0.0.1:" << port << std::endl;
  srv.listen_after_bind();
  return 0;
}
