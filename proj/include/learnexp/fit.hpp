#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace learnexp {

class FitError : public std::runtime_error {
  public:
   using std::runtime_error::runtime_error;
};

struct FitPoint {
   double x = 0.0;
   double y = 0.0;
};

struct FitResult {
   std::string name;
   double exponent = 0.0;
   double intercept = 0.0;  ///< ln of the prefactor
   double stderr_exponent = 0.0;
   double r2 = 0.0;
   std::vector< FitPoint > points;
};

/// Least squares of ln y on ln x. Needs at least 3 points, all positive.
inline FitResult loglog_fit(std::span< const FitPoint > points, std::string name = {})
{
   if(points.size() < 3) {
      throw FitError("log-log fit needs at least 3 points, got " + std::to_string(points.size()));
   }
   const double n = static_cast< double >(points.size());
   double sx = 0.0, sy = 0.0;
   for(const auto& p : points) {
      if(!(p.x > 0.0 && p.y > 0.0)) {
         throw FitError("log-log fit needs positive coordinates (x=" + std::to_string(p.x)
                        + ", y=" + std::to_string(p.y) + ")");
      }
      sx += std::log(p.x);
      sy += std::log(p.y);
   }
   const double mx = sx / n;
   const double my = sy / n;
   double sxx = 0.0, sxy = 0.0, syy = 0.0;
   for(const auto& p : points) {
      const double dx = std::log(p.x) - mx;
      const double dy = std::log(p.y) - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
   }
   if(sxx == 0.0) {
      throw FitError("log-log fit needs at least two distinct x values");
   }
   FitResult r;
   r.name = std::move(name);
   r.exponent = sxy / sxx;
   r.intercept = my - r.exponent * mx;
   const double sse = std::max(0.0, syy - r.exponent * sxy);
   r.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
   r.stderr_exponent = points.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
   r.points.assign(points.begin(), points.end());
   return r;
}

}  // namespace learnexp
