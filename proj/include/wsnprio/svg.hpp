#pragma once

// Minimal static SVG charts: grouped bars and polylines.

#include "metrics.hpp"

#include <sstream>

namespace wsnprio
{
    struct BarGroup
    {
        std::string label;
        std::vector<double> values; // one per series
    };

    struct LineSeries
    {
        std::string name;
        std::vector<double> y; // aligned with the chart's x values; NaN leaves a gap
    };

    namespace detail
    {
        inline constexpr const char *kPalette[] = {"#1b6ca8", "#e07b39", "#3f9c5a", "#b8336a", "#6d6d6d", "#8a6fbf"};

        inline std::string esc(std::string_view s)
        {
            std::string out;
            for (char ch : s)
            {
                switch (ch)
                {
                case '<':
                    out += "&lt;";
                    break;
                case '>':
                    out += "&gt;";
                    break;
                case '&':
                    out += "&amp;";
                    break;
                case '"':
                    out += "&quot;";
                    break;
                default:
                    out += ch;
                }
            }
            return out;
        }

        inline std::string fmt(double x)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", x);
            return buf;
        }

        struct Frame
        {
            double w = 640, h = 400, left = 64, right = 150, top = 40, bottom = 52;
            double pw() const { return w - left - right; }
            double ph() const { return h - top - bottom; }
        };

        inline void open(std::ostringstream &os, const Frame &f, std::string_view title, std::string_view ylabel,
                         double ymax)
        {
            os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h
               << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
            os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
            os << "<text x=\"" << fmt(f.w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
               << "</text>\n";
            os << "<text transform=\"translate(16," << fmt(f.top + f.ph() / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
               << esc(ylabel) << "</text>\n";
            for (int i = 0; i <= 4; ++i)
            {
                const double v = ymax * i / 4.0;
                const double y = f.top + f.ph() * (1.0 - i / 4.0);
                os << "<line x1=\"" << fmt(f.left) << "\" x2=\"" << fmt(f.left + f.pw()) << "\" y1=\"" << fmt(y)
                   << "\" y2=\"" << fmt(y) << "\" stroke=\"#ddd\"/>\n";
                os << "<text x=\"" << fmt(f.left - 6) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
                   << format_number(std::round(v * 1e4) / 1e4) << "</text>\n";
            }
            os << "<line x1=\"" << fmt(f.left) << "\" x2=\"" << fmt(f.left) << "\" y1=\"" << fmt(f.top) << "\" y2=\""
               << fmt(f.top + f.ph()) << "\" stroke=\"black\"/>\n";
            os << "<line x1=\"" << fmt(f.left) << "\" x2=\"" << fmt(f.left + f.pw()) << "\" y1=\"" << fmt(f.top + f.ph())
               << "\" y2=\"" << fmt(f.top + f.ph()) << "\" stroke=\"black\"/>\n";
        }

        inline void legend(std::ostringstream &os, const Frame &f, const std::vector<std::string> &names)
        {
            for (std::size_t i = 0; i < names.size(); ++i)
            {
                const double y = f.top + 10 + 20.0 * static_cast<double>(i);
                const double x = f.left + f.pw() + 14;
                os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
                   << kPalette[i % std::size(kPalette)] << "\"/>\n";
                os << "<text x=\"" << fmt(x + 18) << "\" y=\"" << fmt(y + 1) << "\">" << esc(names[i]) << "</text>\n";
            }
        }

        inline double nice_max(double m)
        {
            if (!(m > 0.0))
                return 1.0;
            const double mag = std::pow(10.0, std::floor(std::log10(m)));
            for (double s : {1.0, 2.0, 2.5, 5.0, 10.0})
            {
                if (s * mag >= m)
                    return s * mag;
            }
            return 10.0 * mag;
        }
    } // namespace detail

    inline std::string bar_chart_svg(std::string_view title, std::string_view ylabel,
                                     const std::vector<std::string> &series, const std::vector<BarGroup> &groups)
    {
        using namespace detail;
        Frame f;
        double m = 0.0;
        for (const auto &g : groups)
            for (double v : g.values)
                m = std::max(m, v);
        const double ymax = nice_max(m);
        std::ostringstream os;
        open(os, f, title, ylabel, ymax);
        const double gw = f.pw() / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
        const double bw = gw * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
        for (std::size_t gi = 0; gi < groups.size(); ++gi)
        {
            const double gx = f.left + gw * static_cast<double>(gi);
            for (std::size_t s = 0; s < groups[gi].values.size(); ++s)
            {
                const double v = groups[gi].values[s];
                const double bh = f.ph() * v / ymax;
                const double x = gx + gw * 0.1 + bw * static_cast<double>(s);
                os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(f.top + f.ph() - bh) << "\" width=\"" << fmt(bw)
                   << "\" height=\"" << fmt(bh) << "\" fill=\"" << kPalette[s % std::size(kPalette)] << "\"/>\n";
            }
            os << "<text x=\"" << fmt(gx + gw / 2) << "\" y=\"" << fmt(f.top + f.ph() + 18)
               << "\" text-anchor=\"middle\">" << esc(groups[gi].label) << "</text>\n";
        }
        legend(os, f, series);
        os << "</svg>\n";
        return os.str();
    }

    inline std::string line_chart_svg(std::string_view title, std::string_view xlabel, std::string_view ylabel,
                                      const std::vector<double> &x, const std::vector<LineSeries> &series)
    {
        using namespace detail;
        Frame f;
        double m = 0.0;
        for (const auto &s : series)
            for (double v : s.y)
                if (std::isfinite(v))
                    m = std::max(m, v);
        const double ymax = nice_max(m);
        std::ostringstream os;
        open(os, f, title, ylabel, ymax);
        auto px = [&](std::size_t i) {
            return x.size() < 2 ? f.left + f.pw() / 2
                                : f.left + f.pw() * static_cast<double>(i) / static_cast<double>(x.size() - 1);
        };
        for (std::size_t i = 0; i < x.size(); ++i)
            os << "<text x=\"" << fmt(px(i)) << "\" y=\"" << fmt(f.top + f.ph() + 18) << "\" text-anchor=\"middle\">"
               << format_number(x[i]) << "</text>\n";
        os << "<text x=\"" << fmt(f.left + f.pw() / 2) << "\" y=\"" << fmt(f.h - 10) << "\" text-anchor=\"middle\">"
           << esc(xlabel) << "</text>\n";
        std::vector<std::string> names;
        for (std::size_t s = 0; s < series.size(); ++s)
        {
            names.push_back(series[s].name);
            const char *color = kPalette[s % std::size(kPalette)];
            std::string pts;
            for (std::size_t i = 0; i < series[s].y.size() && i < x.size(); ++i)
            {
                const double v = series[s].y[i];
                if (!std::isfinite(v))
                    continue;
                const double py = f.top + f.ph() * (1.0 - v / ymax);
                pts += fmt(px(i)) + "," + fmt(py) + " ";
                os << "<circle cx=\"" << fmt(px(i)) << "\" cy=\"" << fmt(py) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
        }
        legend(os, f, names);
        os << "</svg>\n";
        return os.str();
    }
} // namespace wsnprio
