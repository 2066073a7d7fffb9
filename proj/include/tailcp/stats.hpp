#pragma once

namespace tailcp {

double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);  // p in (0,1)

}  // namespace tailcp
