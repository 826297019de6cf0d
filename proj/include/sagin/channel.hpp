// Link budget and rate models for every SAGIN link class.
//
// All functions are pure and templated on the scalar type so the same code
// serves the simulator (double) and the test oracles.
#ifndef SAGIN_CHANNEL_HPP_
#define SAGIN_CHANNEL_HPP_

#include <cmath>
#include <concepts>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sagin::channel {

/// Air-to-ground excess path loss parameters for UAV <-> BS links.
template <std::floating_point Scalar>
struct AirGroundParams {
  Scalar phi = Scalar(3.04);      // path-loss exponent
  Scalar omega0 = Scalar(-3.61);  // angle offset, degrees
  Scalar eta = Scalar(-23.29);    // excess path loss, dB
  Scalar gamma = Scalar(4.14);    // angle scalar
  Scalar k0 = Scalar(20.7);       // excess path-loss offset, dB

  void validate() const {
    if (gamma == Scalar(0)) throw std::domain_error("AirGroundParams: gamma must be non-zero");
  }
};

template <std::floating_point Scalar>
struct RadioParams {
  Scalar bandwidth;    // Hz
  Scalar tx_power;     // W
  Scalar noise_power;  // W
  Scalar tx_gain = Scalar(1);
  Scalar rx_gain = Scalar(1);
  Scalar wavelength = Scalar(0.015);  // m

  void validate() const {
    if (!(bandwidth > 0 && tx_power > 0 && noise_power > 0 && tx_gain > 0 && rx_gain > 0 &&
          wavelength > 0)) {
      throw std::domain_error("RadioParams: all fields must be > 0");
    }
  }
};

enum class RainMode { kFixed, kWeibull };

struct RainModel {
  RainMode mode = RainMode::kFixed;
  double fixed_db = 6.0;
  double shape = 1.0;
  double scale = 6.0;

  void validate() const {
    if (!(fixed_db >= 0 && shape > 0 && scale > 0)) {
      throw std::domain_error("RainModel: need fixed_db >= 0, shape > 0, scale > 0");
    }
  }
};

template <std::floating_point Scalar>
inline Scalar db_to_linear(Scalar db) {
  return std::pow(Scalar(10), db / Scalar(10));
}

template <std::floating_point Scalar>
inline Scalar linear_to_db(Scalar linear) {
  return Scalar(10) * std::log10(linear);
}

/// Thermal noise power in W for a given bandwidth at `density_dbm_hz`.
template <std::floating_point Scalar>
inline Scalar thermal_noise(Scalar bandwidth, Scalar density_dbm_hz = Scalar(-174)) {
  return db_to_linear(density_dbm_hz - Scalar(30)) * bandwidth;
}

/// UAV <-> BS path loss in dB. `horizontal_distance` in m, `elevation_deg` in degrees.
template <std::floating_point Scalar>
inline Scalar path_loss_uav_bs(Scalar horizontal_distance, Scalar elevation_deg,
                               const AirGroundParams<Scalar>& p = {}) {
  if (!(horizontal_distance > 0)) throw std::domain_error("path_loss_uav_bs: distance must be > 0");
  const Scalar angle = elevation_deg - p.omega0;
  return Scalar(10) * p.phi * std::log10(horizontal_distance) +
         p.eta * angle * std::exp(-angle / p.gamma) + p.k0;
}

/// Elevation angle in degrees between two points separated by `dz` vertically
/// and `horizontal` meters on the ground plane.
template <std::floating_point Scalar>
inline Scalar elevation_deg(Scalar dz, Scalar horizontal) {
  return std::atan2(std::abs(dz), horizontal) * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Shannon rate in bits/s for a link whose loss is given in dB.
template <std::floating_point Scalar>
inline Scalar rate_from_path_loss(const RadioParams<Scalar>& r, Scalar path_loss_db) {
  const Scalar snr = r.tx_power * std::pow(Scalar(10), -path_loss_db / Scalar(10)) / r.noise_power;
  return r.bandwidth * std::log2(Scalar(1) + snr);
}

/// Ground (UAV or BS) <-> satellite channel gain, rain attenuation in dB.
template <std::floating_point Scalar>
inline Scalar gain_ground_satellite(const RadioParams<Scalar>& r, Scalar distance, Scalar f_rain_db) {
  if (!(distance > 0)) throw std::domain_error("gain_ground_satellite: distance must be > 0");
  const Scalar spread = Scalar(4) * std::numbers::pi_v<Scalar> * distance;
  return r.tx_gain * r.rx_gain * r.wavelength * r.wavelength / (spread * spread) *
         std::pow(Scalar(10), -f_rain_db / Scalar(10));
}

/// GEO <-> LEO free-space channel gain.
template <std::floating_point Scalar>
inline Scalar gain_inter_satellite(const RadioParams<Scalar>& r, Scalar distance) {
  return gain_ground_satellite(r, distance, Scalar(0));
}

template <std::floating_point Scalar>
inline Scalar rate_from_gain(const RadioParams<Scalar>& r, Scalar gain) {
  if (gain < 0) throw std::domain_error("rate_from_gain: gain must be >= 0");
  return r.bandwidth * std::log2(Scalar(1) + r.tx_power * gain / r.noise_power);
}

/// Inverse-CDF Weibull draw from a uniform variate in [0, 1).
inline double weibull_from_uniform(double u, double shape, double scale) {
  return scale * std::pow(-std::log1p(-u), 1.0 / shape);
}

/// Rain attenuation in dB; consumes exactly one uniform draw in Weibull mode.
template <class Rng>
double rain_attenuation(const RainModel& m, Rng& rng) {
  if (m.mode == RainMode::kFixed) return m.fixed_db;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return weibull_from_uniform(unit(rng), m.shape, m.scale);
}

}  // namespace sagin::channel

#endif  // SAGIN_CHANNEL_HPP_
