"""Tests for MCP server tools, resources and prompts."""

import json
import math

import pytest
from fastmcp.client import Client

from censcov_surv.server import mcp


def _payload(result):
    """Tool results are either a content list or a result object with .content."""
    content = getattr(result, "content", result)
    return json.loads(content[0].text)


@pytest.mark.asyncio
class TestServerTools:
    """Test MCP server tool registration."""

    async def test_all_tools_registered(self):
        """Test that every estimator is exposed as a tool."""
        async with Client(mcp) as client:
            tools = await client.list_tools()
            tool_names = [tool.name for tool in tools]

            assert "censcov__convert_weibull" in tool_names
            assert "censcov__fit_censored_sample" in tool_names
            assert "censcov__normal_mean_diff" in tool_names
            assert "censcov__fit_weibull_reg" in tool_names
            assert "censcov__fit_censcov" in tool_names
            assert "censcov__fit_cox" in tool_names
            assert "censcov__weibull_diag" in tool_names
            assert "censcov__simulate_trial" in tool_names
            assert len(tools) == 8

    async def test_tools_have_descriptions(self):
        """Test that tool docstrings are published."""
        async with Client(mcp) as client:
            tools = await client.list_tools()
            for tool in tools:
                assert tool.description


@pytest.mark.asyncio
class TestServerResources:
    """Test MCP server resources."""

    async def test_resources_registered(self):
        """Test that both resources are registered."""
        async with Client(mcp) as client:
            resources = await client.list_resources()
            resource_uris = [str(resource.uri) for resource in resources]

            assert "censcov://reference-config" in resource_uris
            assert "censcov://interval2-format" in resource_uris
            assert len(resources) == 2

    async def test_reference_config_content(self):
        """Test the reference configuration resource is valid JSON."""
        async with Client(mcp) as client:
            content = await client.read_resource("censcov://reference-config")
            data = json.loads(content[0].text)
            assert "referenceConfig" in data

    async def test_interval2_format_content(self):
        """Test the interval2 format resource is valid JSON."""
        async with Client(mcp) as client:
            content = await client.read_resource("censcov://interval2-format")
            data = json.loads(content[0].text)
            assert isinstance(data, dict)
            assert len(data) > 0


@pytest.mark.asyncio
class TestServerPrompts:
    """Test MCP server prompts."""

    async def test_prompt_registered(self):
        """Test that the workflow prompt is registered."""
        async with Client(mcp) as client:
            prompts = await client.list_prompts()
            prompt_names = [prompt.name for prompt in prompts]

            assert "censcov__lod-regression-workflow" in prompt_names
            assert len(prompts) == 1

    async def test_workflow_prompt_content(self):
        """Test the workflow prompt names the endpoint, covariate and tools."""
        async with Client(mcp) as client:
            result = await client.get_prompt(
                "censcov__lod-regression-workflow",
                arguments={"endpoint": "PFS", "covariate": "MRD"},
            )
            assert len(result.messages) > 0
            content = result.messages[0].content.text
            assert "PFS" in content
            assert "MRD" in content
            assert "censcov__fit_censcov" in content
            assert "censcov__weibull_diag" in content


@pytest.mark.asyncio
class TestToolCalls:
    """Test calling tools through the client."""

    async def test_convert_weibull(self):
        """Test mu=1, sigma=0.5, alpha=1 gives gamma=2 and beta=-2."""
        async with Client(mcp) as client:
            result = await client.call_tool(
                "censcov__convert_weibull",
                {"mu": 1.0, "log_sigma": math.log(0.5), "alpha": [1.0]},
            )
            data = _payload(result)
            assert data["gamma"]["estimate"] == pytest.approx(2.0, rel=1e-12)
            assert data["lambda"]["estimate"] == pytest.approx(math.exp(-2.0), rel=1e-12)
            assert data["beta"][0]["estimate"] == pytest.approx(-2.0, rel=1e-12)

    async def test_fit_censored_sample(self):
        """Test a Normal fit with one left-censored value."""
        values = [{"low": v, "high": v} for v in (-1.2, -0.4, 0.1, 0.5, 0.9, 1.6)]
        values.append({"low": None, "high": -1.5})
        async with Client(mcp) as client:
            result = await client.call_tool(
                "censcov__fit_censored_sample", {"values": values, "family": "normal"}
            )
            data = _payload(result)
            assert [row["name"] for row in data["coefficients"]] == ["mu", "sigma"]
            assert data["n_exact"] == 6
            assert data["n_left"] == 1

    async def test_simulated_trial_feeds_diagnostics(self):
        """Test simulated rows can be passed to the Weibull diagnostic."""
        async with Client(mcp) as client:
            trial = _payload(
                await client.call_tool("censcov__simulate_trial", {"n_per_arm": 10})
            )
            rows = trial["observations"]
            assert len(rows) == 20
            assert trial["config"]["n_per_arm"] == 10

            result = await client.call_tool(
                "censcov__weibull_diag",
                {
                    "times": [r["time"] for r in rows],
                    "events": [r["event"] for r in rows],
                    "strata": ["R" if r["covariates"][0] == 0 else "O" for r in rows],
                },
            )
            data = _payload(result)
            assert [curve["stratum"] for curve in data["km"]] == ["O", "R"]
            assert len(data["diagnostic"]) == 2
            assert data["warnings"] == []
