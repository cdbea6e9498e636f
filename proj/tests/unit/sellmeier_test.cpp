#include <gtest/gtest.h>

#include <string>

#include "oamspdc/errors.hpp"
#include "oamspdc/sellmeier.hpp"
#include "oracles.hpp"

using namespace oamspdc;

TEST(Sellmeier, BboOrdinaryIndexAtPumpWavelength) {
  const double n = refractive_index(0.405, Polarization::ordinary, bbo_eimerl1987());
  EXPECT_NEAR(n, oracle::bbo_index(0.405, true), 1e-14);
  EXPECT_NEAR(n, 1.692, 5e-4);
}

TEST(Sellmeier, BboOrdinaryIndexAtDegenerateWavelength) {
  const double n = refractive_index(0.810, Polarization::ordinary, bbo_eimerl1987());
  EXPECT_NEAR(n, oracle::bbo_index(0.810, true), 1e-14);
  EXPECT_NEAR(n, 1.661, 5e-4);
}

TEST(Sellmeier, ExtraordinaryBelowOrdinary) {
  const auto& bbo = bbo_eimerl1987();
  EXPECT_LT(refractive_index(0.405, Polarization::extraordinary, bbo),
            refractive_index(0.405, Polarization::ordinary, bbo));
  EXPECT_TRUE(bbo.is_negative_uniaxial());
}

TEST(Sellmeier, IndexAboveOneAcrossBand) {
  const auto& bbo = bbo_eimerl1987();
  for (double l = 0.3; l <= 1.2; l += 0.01) {
    EXPECT_GT(refractive_index(l, Polarization::ordinary, bbo), 1.0);
    EXPECT_GT(refractive_index(l, Polarization::extraordinary, bbo), 1.0);
  }
}

TEST(Sellmeier, OutOfBandWavelengthIsDomainError) {
  EXPECT_THROW(refractive_index(0.2, Polarization::ordinary, bbo_eimerl1987()), DomainError);
  EXPECT_THROW(refractive_index(1.5, Polarization::extraordinary, bbo_eimerl1987()), DomainError);
}

TEST(Sellmeier, DataFileCarriesSource) {
  const auto& bbo = bbo_eimerl1987();
  EXPECT_NE(bbo.source.find("Eimerl"), std::string::npos);
  EXPECT_DOUBLE_EQ(bbo.band_lo_um, 0.3);
  EXPECT_DOUBLE_EQ(bbo.band_hi_um, 1.2);
}

TEST(Sellmeier, UnknownKeyRejected) {
  std::string text(bbo_eimerl1987_json());
  text.insert(text.find('{') + 1, "\"colour\": \"clear\",");
  try {
    parse_sellmeier_json(text);
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "colour");
  }
}

TEST(Sellmeier, WrongCoefficientCountRejected) {
  const std::string text = R"({"material": "x", "form": "n^2 = A + B/(lambda^2 - C) - D*lambda^2",
    "polarization": {"ordinary": [2.7, 0.01, 0.01], "extraordinary": [2.3, 0.01, 0.01, 0.0]},
    "valid_band_um": [0.3, 1.2], "source": "test"})";
  try {
    parse_sellmeier_json(text);
    FAIL() << "three coefficients accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "polarization.ordinary");
  }
}

TEST(Sellmeier, SubunityIndexRejected) {
  const std::string text = R"({"material": "x", "form": "n^2 = A + B/(lambda^2 - C) - D*lambda^2",
    "polarization": {"ordinary": [0.5, 0.0, 0.0, 0.0], "extraordinary": [2.3, 0.01, 0.01, 0.0]},
    "valid_band_um": [0.3, 1.2], "source": "test"})";
  EXPECT_THROW(parse_sellmeier_json(text), ConfigError);
}

TEST(Sellmeier, MalformedJsonIsConfigError) { EXPECT_THROW(parse_sellmeier_json("{not json"), ConfigError); }
