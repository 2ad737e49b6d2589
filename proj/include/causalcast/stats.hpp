#pragma once

namespace causalcast {

/// Upper tail of the standard normal, P(Z > z).
double normal_sf(double z);

/// Upper tail of the F(df_num, df_den) distribution. +inf maps to 0.
double f_sf(double f, double df_num, double df_den);

}  // namespace causalcast
