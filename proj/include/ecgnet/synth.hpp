#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgnet/dataset.hpp"
#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"

namespace ecgnet::synth {

inline constexpr double kPi = 3.14159265358979323846;

struct WaveComponent {
  double amplitude;  // mV
  double center;     // fraction of the RR interval
  double width;      // fraction of the RR interval
};

// P, Q, R, S, T as Gaussian bumps over one RR interval.
struct BeatTemplate {
  std::array<WaveComponent, 5> waves;
};

inline BeatTemplate normal_beat_template() {
  return {{{
      {0.15, 0.15, 0.020},   // P
      {-0.10, 0.27, 0.010},  // Q
      {1.00, 0.30, 0.012},   // R
      {-0.20, 0.33, 0.010},  // S
      {0.30, 0.55, 0.040},   // T
  }}};
}

inline std::vector<float> synth_beat(const BeatTemplate& tpl, int rr_samples) {
  std::vector<float> out(static_cast<std::size_t>(rr_samples), 0.0f);
  for (int i = 0; i < rr_samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(rr_samples);
    double v = 0.0;
    for (const auto& w : tpl.waves) {
      const double d = t - w.center;
      v += w.amplitude * std::exp(-d * d / (2.0 * w.width * w.width));
    }
    out[static_cast<std::size_t>(i)] = static_cast<float>(v);
  }
  return out;
}

enum class RhythmEngine {
  Sinus,          // regular sinus, optional RR jitter
  Ectopic,        // periodic (bigeminy/trigeminy) or random ectopic beats
  Fibrillation,   // band-limited stochastic oscillation replacing beats
  Flutter,        // sawtooth flutter baseline plus regular beats
  DroppedBeat,    // AV block II: QRS dropped every n-th beat
  Dissociation,   // AV block III: independent P train and slow ventricular rate
};

struct RhythmClass {
  int id = 0;
  std::string name;
  RhythmEngine engine = RhythmEngine::Sinus;
  double hr_lo = 60.0, hr_hi = 100.0;  // bpm
  double rr_jitter = 0.03;             // fractional std of RR
  int ectopic_period = 0;              // 2 = every 2nd beat, 3 = every 3rd; 0 = random
  double ectopic_prob = 0.0;           // random ectopic insertion probability
  double ectopic_coupling = -1.0;      // fixed coupling interval (fraction of RR), <0 = random
  double qrs_width_mult = 1.0;
  double r_amp = 1.0;
  double s_amp = -0.20;
  double p_amp = 0.15;
  double p_center = 0.15;              // smaller = longer PR interval
  double fib_lo_hz = 0.0, fib_hi_hz = 0.0, fib_amp = 0.0;
  double flutter_hz = 0.0, flutter_amp = 0.0;
  int drop_every = 0;                  // AVB-II
  double atrial_hr_lo = 0.0, atrial_hr_hi = 0.0;  // AVB-III P train
};

// The 20 rhythm categories. Morphology is best-effort Gaussian-bump
// synthesis; what matters downstream is determinism and class separability.
inline const std::vector<RhythmClass>& rhythm_catalog() {
  static const std::vector<RhythmClass> catalog = [] {
    std::vector<RhythmClass> v;
    auto add = [&v](RhythmClass c) {
      c.id = static_cast<int>(v.size());
      v.push_back(std::move(c));
    };
    {  // N: normal sinus
      RhythmClass c;
      c.name = "N";
      add(c);
    }
    {  // RAF: coarse atrial fibrillation
      RhythmClass c;
      c.name = "RAF";
      c.engine = RhythmEngine::Fibrillation;
      c.fib_lo_hz = 4.0; c.fib_hi_hz = 7.0; c.fib_amp = 0.5;
      add(c);
    }
    {  // FAF: fine atrial fibrillation
      RhythmClass c;
      c.name = "FAF";
      c.engine = RhythmEngine::Fibrillation;
      c.fib_lo_hz = 7.0; c.fib_hi_hz = 10.0; c.fib_amp = 0.2;
      add(c);
    }
    {  // AF: atrial flutter
      RhythmClass c;
      c.name = "AF";
      c.engine = RhythmEngine::Flutter;
      c.hr_lo = 75; c.hr_hi = 110;
      c.flutter_hz = 5.0; c.flutter_amp = 0.3;
      add(c);
    }
    {  // SA: sinus arrhythmia
      RhythmClass c;
      c.name = "SA";
      c.rr_jitter = 0.15;
      add(c);
    }
    {  // AT: atrial tachycardia
      RhythmClass c;
      c.name = "AT";
      c.hr_lo = 150; c.hr_hi = 170;
      c.p_amp = 0.22;
      add(c);
    }
    {  // ST: supraventricular tachycardia
      RhythmClass c;
      c.name = "ST";
      c.hr_lo = 160; c.hr_hi = 190;
      c.p_amp = 0.05;
      add(c);
    }
    {  // PAC: premature atrial contractions
      RhythmClass c;
      c.name = "PAC";
      c.engine = RhythmEngine::Ectopic;
      c.ectopic_prob = 0.25;
      c.qrs_width_mult = 1.0;  // atrial ectopic keeps a narrow QRS
      add(c);
    }
    {  // VB: ventricular bigeminy
      RhythmClass c;
      c.name = "VB";
      c.engine = RhythmEngine::Ectopic;
      c.ectopic_period = 2;
      add(c);
    }
    {  // VTr: ventricular trigeminy
      RhythmClass c;
      c.name = "VTr";
      c.engine = RhythmEngine::Ectopic;
      c.ectopic_period = 3;
      add(c);
    }
    {  // PVCCI: PVCs with a fixed coupling interval
      RhythmClass c;
      c.name = "PVCCI";
      c.engine = RhythmEngine::Ectopic;
      c.ectopic_prob = 0.20;
      c.ectopic_coupling = 0.6;
      add(c);
    }
    {  // VTa: ventricular tachycardia
      RhythmClass c;
      c.name = "VTa";
      c.hr_lo = 150; c.hr_hi = 200;
      c.qrs_width_mult = 3.0;
      c.p_amp = 0.0;
      c.s_amp = -0.45;
      add(c);
    }
    {  // RVF: coarse (rough) ventricular fibrillation
      RhythmClass c;
      c.name = "RVF";
      c.engine = RhythmEngine::Fibrillation;
      c.fib_lo_hz = 2.0; c.fib_hi_hz = 5.0; c.fib_amp = 0.8;
      add(c);
    }
    {  // FVF: fine ventricular fibrillation
      RhythmClass c;
      c.name = "FVF";
      c.engine = RhythmEngine::Fibrillation;
      c.fib_lo_hz = 5.0; c.fib_hi_hz = 9.0; c.fib_amp = 0.3;
      add(c);
    }
    {  // AVB-I: prolonged PR interval
      RhythmClass c;
      c.name = "AVB-I";
      c.hr_lo = 60; c.hr_hi = 90;
      c.p_center = 0.05;
      add(c);
    }
    {  // AVB-II: intermittently dropped QRS
      RhythmClass c;
      c.name = "AVB-II";
      c.engine = RhythmEngine::DroppedBeat;
      c.hr_lo = 60; c.hr_hi = 90;
      c.drop_every = 3;
      add(c);
    }
    {  // AVB-III: atrio-ventricular dissociation
      RhythmClass c;
      c.name = "AVB-III";
      c.engine = RhythmEngine::Dissociation;
      c.hr_lo = 35; c.hr_hi = 45;        // ventricular escape rate
      c.atrial_hr_lo = 70; c.atrial_hr_hi = 90;
      c.qrs_width_mult = 1.8;
      c.p_amp = 0.0;
      add(c);
    }
    {  // RBBB
      RhythmClass c;
      c.name = "RBBB";
      c.qrs_width_mult = 2.0;
      c.s_amp = -0.55;
      add(c);
    }
    {  // LBBB
      RhythmClass c;
      c.name = "LBBB";
      c.qrs_width_mult = 2.2;
      c.r_amp = 0.80;
      c.s_amp = -0.35;
      add(c);
    }
    {  // PVC: isolated premature ventricular contractions
      RhythmClass c;
      c.name = "PVC";
      c.engine = RhythmEngine::Ectopic;
      c.ectopic_prob = 0.25;
      c.qrs_width_mult = 1.0;  // ectopic beats widen, sinus beats stay narrow
      add(c);
    }
    return v;
  }();
  return catalog;
}

inline const RhythmClass& class_by_name(const std::string& name) {
  for (const auto& c : rhythm_catalog())
    if (c.name == name) return c;
  throw BadLabel("unknown rhythm class '" + name + "'");
}

inline const RhythmClass& class_by_id(int id) {
  const auto& cat = rhythm_catalog();
  if (id < 0 || static_cast<std::size_t>(id) >= cat.size())
    throw BadLabel("class id " + std::to_string(id));
  return cat[static_cast<std::size_t>(id)];
}

struct NoiseConfig {
  double baseline_amp = 0.05;   // slow baseline wander (mV)
  double gaussian_std = 0.01;   // additive white noise (mV)
  double powerline_amp = 0.0;   // 50 Hz interference (mV)
};

namespace detail {

inline BeatTemplate class_template(const RhythmClass& cls) {
  BeatTemplate tpl = normal_beat_template();
  tpl.waves[0].amplitude = cls.p_amp;
  tpl.waves[0].center = cls.p_center;
  tpl.waves[2].amplitude = cls.r_amp;
  tpl.waves[3].amplitude = cls.s_amp;
  tpl.waves[1].width *= cls.qrs_width_mult;
  tpl.waves[2].width *= cls.qrs_width_mult;
  tpl.waves[3].width *= cls.qrs_width_mult;
  return tpl;
}

inline BeatTemplate ventricular_ectopic_template() {
  BeatTemplate tpl = normal_beat_template();
  tpl.waves[0].amplitude = 0.0;   // no P
  tpl.waves[2].amplitude = 1.3;   // tall wide R
  tpl.waves[2].width *= 3.0;
  tpl.waves[3].amplitude = -0.6;
  tpl.waves[3].width *= 3.0;
  tpl.waves[4].amplitude = -0.25;  // discordant T
  return tpl;
}

// Sum of seeded sinusoids with frequencies uniform in [lo, hi].
inline void add_band_noise(std::vector<float>& out, int rate, double lo_hz, double hi_hz,
                           double amp, SplitMix64& rng) {
  constexpr int kComponents = 8;
  for (int c = 0; c < kComponents; ++c) {
    const double f = rng.uniform(lo_hz, hi_hz);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double a = amp * (0.5 + rng.uniform01()) / kComponents * 2.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double t = static_cast<double>(i) / rate;
      out[i] += static_cast<float>(a * std::sin(2.0 * kPi * f * t + phase));
    }
  }
}

inline void append_beat(std::vector<float>& out, const BeatTemplate& tpl, int rr_samples) {
  const auto beat = synth_beat(tpl, rr_samples);
  out.insert(out.end(), beat.begin(), beat.end());
}

}  // namespace detail

inline data::EcgRecord synth_record(const RhythmClass& cls, double duration_s, int rate,
                                    std::uint64_t seed, const NoiseConfig& noise = {}) {
  if (duration_s <= 0.0) throw InvalidDuration("duration must be positive");
  if (rate <= 0) throw InvalidDuration("sample rate must be positive");
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * rate));
  if (n == 0) throw InvalidDuration("duration too short for one sample");

  SplitMix64 rng(seed ^ (static_cast<std::uint64_t>(cls.id) << 32));
  std::vector<float> sig;
  sig.reserve(n + static_cast<std::size_t>(2 * rate));

  const double hr = rng.uniform(cls.hr_lo, cls.hr_hi);
  const double base_rr = 60.0 / hr * rate;  // samples

  switch (cls.engine) {
    case RhythmEngine::Fibrillation: {
      sig.assign(n, 0.0f);
      detail::add_band_noise(sig, rate, cls.fib_lo_hz, cls.fib_hi_hz, cls.fib_amp, rng);
      break;
    }
    case RhythmEngine::Dissociation: {
      // slow wide ventricular beats...
      const auto vtpl = detail::class_template(cls);
      while (sig.size() < n) {
        const int rr = std::max(32, static_cast<int>(std::llround(
                                        base_rr * (1.0 + cls.rr_jitter * rng.normal()))));
        detail::append_beat(sig, vtpl, rr);
      }
      sig.resize(n);
      // ...plus an independent P train at the atrial rate
      const double atrial_hr = rng.uniform(cls.atrial_hr_lo, cls.atrial_hr_hi);
      const double p_rr = 60.0 / atrial_hr * rate;
      const double p_width = 0.02 * p_rr;
      double center = rng.uniform(0.0, p_rr);
      while (center < static_cast<double>(n) + 4.0 * p_width) {
        const int lo = std::max(0, static_cast<int>(center - 5.0 * p_width));
        const int hi = std::min(static_cast<int>(n), static_cast<int>(center + 5.0 * p_width));
        for (int i = lo; i < hi; ++i) {
          const double d = static_cast<double>(i) - center;
          sig[static_cast<std::size_t>(i)] +=
              static_cast<float>(0.15 * std::exp(-d * d / (2.0 * p_width * p_width)));
        }
        center += p_rr;
      }
      break;
    }
    case RhythmEngine::DroppedBeat: {
      auto tpl = detail::class_template(cls);
      auto p_only = tpl;
      for (int w = 1; w < 5; ++w) p_only.waves[static_cast<std::size_t>(w)].amplitude = 0.0;
      int beat_idx = 0;
      while (sig.size() < n) {
        const int rr = std::max(32, static_cast<int>(std::llround(
                                        base_rr * (1.0 + cls.rr_jitter * rng.normal()))));
        const bool dropped = cls.drop_every > 0 && (beat_idx + 1) % cls.drop_every == 0;
        detail::append_beat(sig, dropped ? p_only : tpl, rr);
        ++beat_idx;
      }
      sig.resize(n);
      break;
    }
    case RhythmEngine::Ectopic: {
      const auto tpl = detail::class_template(cls);
      const auto ect = detail::ventricular_ectopic_template();
      int beat_idx = 0;
      while (sig.size() < n) {
        bool is_ectopic = false;
        if (cls.ectopic_period > 0) {
          is_ectopic = (beat_idx % cls.ectopic_period) == cls.ectopic_period - 1;
        } else {
          is_ectopic = rng.uniform01() < cls.ectopic_prob;
        }
        if (is_ectopic) {
          const double coupling =
              cls.ectopic_coupling > 0.0 ? cls.ectopic_coupling : rng.uniform(0.5, 0.8);
          const int rr_e = std::max(32, static_cast<int>(std::llround(base_rr * coupling)));
          // compensatory pause after the premature beat
          const int rr_p = std::max(32, static_cast<int>(std::llround(base_rr * (2.0 - coupling))));
          detail::append_beat(sig, ect, rr_e);
          if (sig.size() < n) detail::append_beat(sig, tpl, rr_p);
          beat_idx += 2;
        } else {
          const int rr = std::max(32, static_cast<int>(std::llround(
                                          base_rr * (1.0 + cls.rr_jitter * rng.normal()))));
          detail::append_beat(sig, tpl, rr);
          ++beat_idx;
        }
      }
      sig.resize(n);
      break;
    }
    case RhythmEngine::Flutter:
    case RhythmEngine::Sinus: {
      const auto tpl = detail::class_template(cls);
      while (sig.size() < n) {
        const int rr = std::max(32, static_cast<int>(std::llround(
                                        base_rr * (1.0 + cls.rr_jitter * rng.normal()))));
        detail::append_beat(sig, tpl, rr);
      }
      sig.resize(n);
      if (cls.engine == RhythmEngine::Flutter) {
        // sawtooth flutter baseline
        const double period = static_cast<double>(rate) / cls.flutter_hz;
        const double phase = rng.uniform(0.0, period);
        for (std::size_t i = 0; i < n; ++i) {
          const double frac = std::fmod(static_cast<double>(i) + phase, period) / period;
          sig[i] += static_cast<float>(cls.flutter_amp * (frac - 0.5));
        }
      }
      break;
    }
  }

  // shared noise model
  if (noise.baseline_amp > 0.0) {
    const double f = rng.uniform(0.15, 0.4);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      sig[i] += static_cast<float>(noise.baseline_amp * std::sin(2.0 * kPi * f * t + phase));
    }
  }
  if (noise.powerline_amp > 0.0) {
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      sig[i] += static_cast<float>(noise.powerline_amp * std::sin(2.0 * kPi * 50.0 * t + phase));
    }
  }
  if (noise.gaussian_std > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      sig[i] += static_cast<float>(noise.gaussian_std * rng.normal());
  }

  data::EcgRecord rec;
  rec.samples = std::move(sig);
  rec.sample_rate_hz = rate;
  rec.label = cls.id;
  return rec;
}

}  // namespace ecgnet::synth
