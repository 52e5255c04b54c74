#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "toolseq/raster.hpp"

namespace toolseq {

struct ProviderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quality evaluator. The per-step reward is always a difference of two scores.
class RewardProvider {
 public:
  virtual ~RewardProvider() = default;
  virtual double score(const Raster& img) const = 0;
  virtual std::string name() const = 0;
};

// Supervised oracle: score = PSNR against the hidden clean image, range [0,99].
std::unique_ptr<RewardProvider> oracle_psnr_provider(Raster clean);

// Label-free proxy: 5 minus weighted degradation penalties, clamped to [1,5].
// Penalty keys: noise, blockiness, blur, haze, dark, rain, low_contrast.
std::unique_ptr<RewardProvider> proxy_nr_provider(
    const std::map<std::string, double>& weights = {});

// RFC 4648 base64, used by the remote wire protocol and the bundled scorer.
std::string base64_encode(const std::string& in);
std::string base64_decode(const std::string& in);

// Remote evaluator speaking POST /score {"image": "<base64 png>"} -> {"score": x}.
// Retries transport failures with exponential backoff; throws ProviderError after
// `retries` failed attempts or on a malformed response.
std::unique_ptr<RewardProvider> remote_provider(const std::string& endpoint,
                                                double timeout_seconds = 10.0,
                                                int retries = 3);

}  // namespace toolseq
