#pragma once

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace gfi::test {

inline Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c) { return rng.normal_mat(r, c); }

inline Mat random_orthogonal(Rng& rng, Eigen::Index n) {
    Eigen::HouseholderQR<Mat> qr(rng.normal_mat(n, n));
    return qr.householderQ();
}

// x1' = x2, x2' = u, y = x1
inline SystemModel double_integrator(bool with_fault = true, bool with_sensor = true) {
    Mat A(2, 2), B(2, 1), C(1, 2);
    A << 0, 1, 0, 0;
    B << 0, 1;
    C << 1, 0;
    return linear_model(A, B, C, with_fault ? B : Mat(2, 0), with_sensor ? Mat::Ones(1, 1) : Mat(1, 0));
}

// two actuator channels share the same signature field
inline SystemModel duplicated_signature_model() {
    Mat A = Mat::Zero(2, 2), B(2, 2), C = Mat::Identity(2, 2);
    A(0, 1) = 1.0;
    B << 1, 0, 0, 1;
    Mat Bf(2, 2);
    Bf << 1, 1, 0, 0;
    return linear_model(A, B, C, Bf, Mat(2, 0));
}

inline FaultScenario paper_actuator_scenario() {
    FaultScenario s;
    s.actuator_channels = 4;
    s.sensor_channels = 3;
    s.horizon_s = 60.0;
    s.actuator_faults = {{1, 0.25, 20.0, 50.0}, {2, 0.5, 10.0, 35.0}};
    return s;
}

inline FaultScenario paper_combined_scenario() {
    FaultScenario s = paper_actuator_scenario();
    s.sensor_faults.push_back({0, 0.035, 0.6 * std::numbers::pi, 0.0, 15.0, 50.0});
    s.sensor_faults.push_back({1, 0.030, 0.5 * std::numbers::pi, -std::numbers::pi / 2.0, 20.0, 55.0});
    return s;
}

// small hand-built feature map: tanh(W x + b) with identity normalization
inline FeatureMap small_feature_map(Rng& rng, Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
    FeatureMap fm;
    fm.input_mean = Vec::Zero(in);
    fm.input_scale = Vec::Ones(in);
    fm.activation = Activation::tanh;
    fm.layers.push_back({0.5 * rng.normal_mat(hidden, in), 0.1 * rng.normal_vec(hidden)});
    fm.layers.push_back({0.5 * rng.normal_mat(out, hidden), 0.1 * rng.normal_vec(out)});
    fm.lipschitz_estimate = lipschitz_bound(fm);
    return fm;
}

inline fs::path source_dir() { return GFI_SOURCE_DIR; }

inline fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gfi_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace gfi::test
