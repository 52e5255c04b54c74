#include "toolseq/reward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "toolseq/featurize.hpp"

using nlohmann::json;

namespace toolseq {

namespace {

class OraclePsnrProvider final : public RewardProvider {
 public:
  explicit OraclePsnrProvider(Raster clean) : clean_(std::move(clean)) {}
  double score(const Raster& img) const override { return psnr(img, clean_); }
  std::string name() const override { return "oracle-psnr"; }

 private:
  Raster clean_;
};

class ProxyNrProvider final : public RewardProvider {
 public:
  explicit ProxyNrProvider(std::map<std::string, double> weights)
      : weights_(std::move(weights)) {
    for (const char* key :
         {"noise", "blockiness", "blur", "haze", "dark", "rain", "low_contrast"})
      weights_.try_emplace(key, 1.0);
  }

  // Baselines are the clean-corpus operating points: penalties measure the
  // deficit (or excess) relative to a clean image, clamped at zero, so a clean
  // image scores ~5.0 and pushing a statistic past the clean point (e.g.
  // over-brightening, dehazing a haze-free image) earns nothing.
  static constexpr double kMeanVBase = 0.65;
  static constexpr double kStdLumaBase = 0.12;
  static constexpr double kSharpBase = 0.35;
  static constexpr double kDarkChannelBase = 0.28;

  static double deficit(double x, double base) {
    return std::max(0.0, (base - x) / base);
  }

  double score(const Raster& img) const override {
    FeatureVector f = extract_features(img);
    double penalty =
        weights_.at("noise") * f[kSlotNoiseEstimate] +
        weights_.at("blockiness") * f[kSlotBlockiness] +
        weights_.at("blur") * deficit(f[kSlotSharpness], kSharpBase) +
        weights_.at("haze") *
            std::max(0.0, (f[kSlotDarkChannelMean] - kDarkChannelBase) /
                              (1.0 - kDarkChannelBase)) +
        weights_.at("dark") * deficit(f[kSlotMeanV], kMeanVBase) +
        weights_.at("rain") * f[kSlotDirectionalEnergy] +
        weights_.at("low_contrast") * deficit(f[kSlotStdLuma], kStdLumaBase);
    return std::clamp(5.0 - penalty, 1.0, 5.0);
  }

  std::string name() const override { return "proxy-nr"; }

 private:
  std::map<std::string, double> weights_;
};

}  // namespace

std::string base64_encode(const std::string& in) {
  static const char* tbl =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < in.size()) {
    unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8) |
                 static_cast<unsigned char>(in[i + 2]);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += tbl[v & 63];
    i += 3;
  }
  if (i + 1 == in.size()) {
    unsigned v = static_cast<unsigned char>(in[i]) << 16;
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += "=";
  }
  return out;
}

std::string base64_decode(const std::string& in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  out.reserve(in.size() / 4 * 3);
  int acc = 0, bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = val(c);
    if (v < 0) throw std::invalid_argument("base64_decode: invalid character");
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  return out;
}

namespace {

class RemoteProvider final : public RewardProvider {
 public:
  RemoteProvider(std::string endpoint, double timeout_seconds, int retries)
      : endpoint_(std::move(endpoint)),
        timeout_seconds_(timeout_seconds),
        retries_(retries) {}

  double score(const Raster& img) const override {
    json body = {{"image", base64_encode(encode_png(img))}};
    std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
      httplib::Client client(endpoint_);
      client.set_connection_timeout(std::chrono::duration<double>(timeout_seconds_));
      client.set_read_timeout(std::chrono::duration<double>(timeout_seconds_));
      auto res = client.Post("/score", payload, "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw ProviderError("remote scorer returned status " + std::to_string(res->status));
      try {
        json j = json::parse(res->body);
        if (!j.contains("score") || !j.at("score").is_number())
          throw ProviderError("remote scorer response has no numeric 'score'");
        return j.at("score").get<double>();
      } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed remote scorer response: ") + e.what());
      }
    }
    throw ProviderError("remote scorer unreachable after " +
                        std::to_string(retries_ + 1) + " attempts: " + last_error);
  }

  std::string name() const override { return "remote"; }

 private:
  std::string endpoint_;
  double timeout_seconds_;
  int retries_;
};

}  // namespace

std::unique_ptr<RewardProvider> oracle_psnr_provider(Raster clean) {
  return std::make_unique<OraclePsnrProvider>(std::move(clean));
}

std::unique_ptr<RewardProvider> proxy_nr_provider(
    const std::map<std::string, double>& weights) {
  return std::make_unique<ProxyNrProvider>(weights);
}

std::unique_ptr<RewardProvider> remote_provider(const std::string& endpoint,
                                                double timeout_seconds, int retries) {
  return std::make_unique<RemoteProvider>(endpoint, timeout_seconds, retries);
}

}  // namespace toolseq
