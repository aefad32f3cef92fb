// forkscope viewer: one row per repository, one circle per unique commit.
(function () {
  "use strict";

  var SVG_NS = "http://www.w3.org/2000/svg";
  var GREEN = "#28a745";
  var BLUE = "#1f77b4";
  var LEFT = 150;
  var RIGHT = 300;
  var AXIS = 28;

  var config = JSON.parse(document.getElementById("forkscope-config").textContent);
  var state = { bugfixOnly: false, timeWindow: null, hovered: null };
  var artifact = null;

  function radius(addedLines) {
    return config.minRadius + config.logScale * Math.log1p(addedLines);
  }

  function el(name, attrs, parent) {
    var node = document.createElementNS(SVG_NS, name);
    Object.keys(attrs || {}).forEach(function (k) { node.setAttribute(k, attrs[k]); });
    if (parent) parent.appendChild(node);
    return node;
  }

  function showError(message) {
    var box = document.getElementById("errors");
    box.textContent = "Cannot display this artifact:\n" + message;
    box.hidden = false;
  }

  function validate(a) {
    if (!a || typeof a !== "object") return "/: expected an object";
    if (a.schema_version !== 1) return "/schema_version: unsupported version " + a.schema_version;
    if (!a.origin || !Array.isArray(a.forks)) return "/: origin and forks are required";
    var rows = [a.origin].concat(a.forks);
    for (var i = 0; i < rows.length; i++) {
      var ptr = i === 0 ? "/origin" : "/forks/" + (i - 1);
      if (!Array.isArray(rows[i].commits)) return ptr + "/commits: expected an array";
      for (var j = 0; j < rows[i].commits.length; j++) {
        var c = rows[i].commits[j];
        if (!/^[0-9a-f]{40}$/.test(c.sha)) return ptr + "/commits/" + j + "/sha: invalid";
        if (isNaN(Date.parse(c.timestamp))) return ptr + "/commits/" + j + "/timestamp: invalid";
      }
    }
    return null;
  }

  function visible(commit) {
    if (state.bugfixOnly && !commit.is_bugfix) return false;
    if (state.timeWindow) {
      var t = Date.parse(commit.timestamp);
      if (t < state.timeWindow[0] || t > state.timeWindow[1]) return false;
    }
    return true;
  }

  function timeExtent(rows) {
    var lo = Infinity, hi = -Infinity;
    rows.forEach(function (r) {
      r.commits.forEach(function (c) {
        var t = Date.parse(c.timestamp);
        if (t < lo) lo = t;
        if (t > hi) hi = t;
      });
    });
    if (!isFinite(lo)) { lo = Date.now() - 864e5 * 365; hi = Date.now(); }
    if (state.timeWindow) { lo = state.timeWindow[0]; hi = state.timeWindow[1]; }
    var pad = Math.max((hi - lo) * 0.02, 864e5);
    return [lo - pad, hi + pad];
  }

  function ticks(lo, hi) {
    var out = [];
    var years = (hi - lo) / (864e5 * 365);
    var step = years > 2 ? 12 : (years > 0.5 ? 3 : 1);
    var d = new Date(lo);
    d = new Date(Date.UTC(d.getUTCFullYear(), d.getUTCMonth() + 1, 1));
    while (d.getTime() <= hi) {
      if (d.getUTCMonth() % step === 0) {
        out.push({
          t: d.getTime(),
          label: step === 12 ? String(d.getUTCFullYear())
            : d.getUTCFullYear() + "-" + String(d.getUTCMonth() + 1).padStart(2, "0")
        });
      }
      d = new Date(Date.UTC(d.getUTCFullYear(), d.getUTCMonth() + 1, 1));
    }
    return out;
  }

  function render() {
    var chart = document.getElementById("chart");
    chart.textContent = "";
    var rows = [artifact.origin].concat(artifact.forks);
    var plotWidth = Math.max(600, window.innerWidth - LEFT - RIGHT - 48);
    var height = AXIS + rows.length * config.rowHeight;
    var svg = el("svg", { width: LEFT + plotWidth + RIGHT, height: height }, chart);
    var extent = timeExtent(rows);
    var x = function (t) { return LEFT + (t - extent[0]) / (extent[1] - extent[0]) * plotWidth; };

    var axis = el("g", { "class": "axis" }, svg);
    el("line", { x1: LEFT, x2: LEFT + plotWidth, y1: AXIS - 6, y2: AXIS - 6 }, axis);
    ticks(extent[0], extent[1]).forEach(function (tick) {
      el("line", { x1: x(tick.t), x2: x(tick.t), y1: AXIS - 10, y2: AXIS - 6 }, axis);
      var label = el("text", { x: x(tick.t), y: AXIS - 14, "text-anchor": "middle" }, axis);
      label.textContent = tick.label;
    });

    var brushLayer = el("rect", {
      x: LEFT, y: AXIS, width: plotWidth, height: height - AXIS, fill: "transparent"
    }, svg);
    installBrush(svg, brushLayer, x, extent, plotWidth);

    rows.forEach(function (row, i) {
      var top = AXIS + i * config.rowHeight;
      var mid = top + config.rowHeight / 2;
      var g = el("g", { "class": "row", "data-repo": row.full_name, "data-row": i }, svg);
      el("rect", {
        "class": "row-band" + (i % 2 ? " alt" : ""), x: 0, y: top,
        width: LEFT + plotWidth + RIGHT, height: config.rowHeight, "pointer-events": "none"
      }, g);
      var owner = el("text", { "class": "owner", x: 8, y: mid + 4 }, g);
      owner.textContent = row.owner;
      var link = el("a", { href: row.url, target: "_blank", rel: "noopener" }, g);
      var name = el("text", { x: LEFT + plotWidth + 12, y: mid + 4 }, link);
      name.textContent = row.full_name + "  (" + row.bugfix_count + " bug fix" +
        (row.bugfix_count === 1 ? "" : "es") + ")";

      row.commits.forEach(function (c) {
        if (!visible(c)) return;
        var circle = el("circle", {
          "class": "commit", cx: x(Date.parse(c.timestamp)), cy: mid,
          r: radius(c.added_lines).toFixed(2), fill: c.is_bugfix ? BLUE : GREEN,
          "fill-opacity": 0.6, "data-sha": c.sha, "data-url": c.url
        }, g);
        circle.addEventListener("mouseenter", function (ev) { onHover(c, ev); });
        circle.addEventListener("mousemove", moveTooltip);
        circle.addEventListener("mouseleave", function () { onHover(null); });
        circle.addEventListener("click", function () { onClick(c); });
      });
    });
  }

  function onHover(commit, ev) {
    var tip = document.getElementById("tooltip");
    state.hovered = commit ? commit.sha : null;
    if (!commit) { tip.hidden = true; return; }
    tip.textContent = "";
    var subject = document.createElement("div");
    subject.className = "subject";
    subject.textContent = commit.subject;
    tip.appendChild(subject);
    if (commit.message_excerpt) {
      var body = document.createElement("div");
      body.textContent = commit.message_excerpt;
      tip.appendChild(body);
    }
    var meta = document.createElement("div");
    meta.className = "meta";
    meta.textContent = commit.sha.slice(0, 10) + " · " + commit.timestamp + " · +" +
      commit.added_lines + " lines";
    tip.appendChild(meta);
    tip.hidden = false;
    moveTooltip(ev);
  }

  function moveTooltip(ev) {
    var tip = document.getElementById("tooltip");
    tip.style.left = (ev.clientX + 14) + "px";
    tip.style.top = (ev.clientY + 14) + "px";
  }

  function onClick(commit) {
    window.open(commit.url, "_blank", "noopener");
  }

  function setWindow(start, end) {
    if (start !== null && end !== null && start < end) {
      state.timeWindow = [start, end];
    } else {
      state.timeWindow = null;
    }
    var fmt = function (t) { return t === null ? "" : new Date(t).toISOString().slice(0, 10); };
    document.getElementById("window-start").value = state.timeWindow ? fmt(start) : "";
    document.getElementById("window-end").value = state.timeWindow ? fmt(end) : "";
    render();
  }

  function installBrush(svg, layer, x, extent, plotWidth) {
    var origin = null, rect = null;
    var toTime = function (px) { return extent[0] + (px - LEFT) / plotWidth * (extent[1] - extent[0]); };
    var localX = function (ev) { return ev.clientX - svg.getBoundingClientRect().left; };
    layer.addEventListener("mousedown", function (ev) {
      origin = localX(ev);
      rect = el("rect", { "class": "brush", x: origin, y: AXIS, width: 0, height: layer.getAttribute("height") }, svg);
    });
    svg.addEventListener("mousemove", function (ev) {
      if (origin === null) return;
      var cur = Math.min(Math.max(localX(ev), LEFT), LEFT + plotWidth);
      rect.setAttribute("x", Math.min(origin, cur));
      rect.setAttribute("width", Math.abs(cur - origin));
    });
    svg.addEventListener("mouseup", function (ev) {
      if (origin === null) return;
      var a = toTime(origin), b = toTime(Math.min(Math.max(localX(ev), LEFT), LEFT + plotWidth));
      origin = null;
      if (Math.abs(b - a) > 864e5) setWindow(Math.min(a, b), Math.max(a, b)); else render();
    });
  }

  function bindControls() {
    document.getElementById("bugfix-only").addEventListener("change", function (ev) {
      state.bugfixOnly = ev.target.checked;
      render();
    });
    var readDate = function (id, endOfDay) {
      var v = document.getElementById(id).value;
      if (!v) return null;
      return Date.parse(v + (endOfDay ? "T23:59:59Z" : "T00:00:00Z"));
    };
    var onDate = function () {
      var s = readDate("window-start", false), e = readDate("window-end", true);
      if (s !== null && e !== null && s < e) { state.timeWindow = [s, e]; render(); }
    };
    document.getElementById("window-start").addEventListener("change", onDate);
    document.getElementById("window-end").addEventListener("change", onDate);
    document.getElementById("window-reset").addEventListener("click", function () { setWindow(null, null); });
    window.addEventListener("resize", render);
  }

  function showWarnings(warnings) {
    if (!warnings || !warnings.length) return;
    var list = document.getElementById("warnings");
    warnings.forEach(function (w) {
      var li = document.createElement("li");
      li.textContent = w;
      list.appendChild(li);
    });
    list.hidden = false;
  }

  function start(data) {
    var problem = validate(data);
    if (problem) { showError(problem); return; }
    artifact = data;
    showWarnings(artifact.warnings);
    bindControls();
    render();
  }

  var inline = document.getElementById("forkscope-data");
  if (inline && inline.textContent.trim()) {
    try { start(JSON.parse(inline.textContent)); } catch (e) { showError(String(e)); }
  } else {
    fetch("data.json").then(function (r) { return r.json(); }).then(start, function (e) { showError(String(e)); });
  }
})();
