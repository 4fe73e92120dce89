#pragma once

// Minimal SVG emission for the plot outputs. CSV stays the canonical data
// format; these files are a convenience for quick looks.

#include <algorithm>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace svgplot {

struct LinearScale {
    double domain_lo = 0.0, domain_hi = 1.0;
    double range_lo = 0.0, range_hi = 1.0;

    double operator()(double value) const {
        if (domain_hi == domain_lo) return (range_lo + range_hi) / 2;
        const double t = (value - domain_lo) / (domain_hi - domain_lo);
        return range_lo + t * (range_hi - range_lo);
    }
};

class Canvas {
public:
    Canvas(double width, double height) : width_(width), height_(height) {}

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0) {
        body_ << "<line x1='" << x1 << "' y1='" << y1 << "' x2='" << x2 << "' y2='" << y2
              << "' stroke='" << stroke << "' stroke-width='" << stroke_width << "'/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& points,
                  const std::string& stroke, double stroke_width = 1.5) {
        body_ << "<polyline fill='none' stroke='" << stroke << "' stroke-width='"
              << stroke_width << "' points='";
        for (const auto& [x, y] : points) body_ << x << ',' << y << ' ';
        body_ << "'/>\n";
    }

    void polygon(const std::vector<std::pair<double, double>>& points, const std::string& fill,
                 double opacity) {
        body_ << "<polygon fill='" << fill << "' fill-opacity='" << opacity
              << "' stroke='none' points='";
        for (const auto& [x, y] : points) body_ << x << ',' << y << ' ';
        body_ << "'/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0) {
        body_ << "<circle cx='" << cx << "' cy='" << cy << "' r='" << r << "' fill='" << fill
              << "' fill-opacity='" << opacity << "'/>\n";
    }

    void text(double x, double y, const std::string& content, double size = 11.0,
              const std::string& anchor = "start") {
        body_ << "<text x='" << x << "' y='" << y << "' font-size='" << size
              << "' font-family='sans-serif' text-anchor='" << anchor << "'>" << content
              << "</text>\n";
    }

    // Plain box axes with min/max tick labels.
    void axes(double left, double top, double right, double bottom, const std::string& x_label,
              const std::string& y_label, double x_lo, double x_hi, double y_lo, double y_hi) {
        line(left, bottom, right, bottom, "#333");
        line(left, top, left, bottom, "#333");
        std::ostringstream lo, hi;
        lo.precision(4);
        hi.precision(4);
        lo << x_lo;
        hi << x_hi;
        text(left, bottom + 14, lo.str(), 10);
        text(right, bottom + 14, hi.str(), 10, "end");
        lo.str("");
        hi.str("");
        lo << y_lo;
        hi << y_hi;
        text(left - 4, bottom, lo.str(), 10, "end");
        text(left - 4, top + 10, hi.str(), 10, "end");
        text((left + right) / 2, bottom + 28, x_label, 11, "middle");
        text(left - 34, (top + bottom) / 2, y_label, 11, "middle");
    }

    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width_ << "' height='"
            << height_ << "' viewBox='0 0 " << width_ << ' ' << height_ << "'>\n"
            << "<rect width='100%' height='100%' fill='white'/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

private:
    double width_;
    double height_;
    std::ostringstream body_;
};

}  // namespace svgplot
