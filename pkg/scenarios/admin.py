"""Admin configuration for recorded scenario runs."""

from django.contrib import admin

from scenarios.models import ReportFlag, ScenarioRun


class ReportFlagInline(admin.TabularInline):
    model = ReportFlag
    extra = 0
    readonly_fields = ("name", "value", "comparison", "tolerance_key", "tolerance", "passed")


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    list_display = ("scenario", "seed", "status", "out_dir", "created_at", "finished_at")
    list_filter = ("scenario", "status", "created_at")
    search_fields = ("scenario", "out_dir", "error")
    readonly_fields = ("created_at", "finished_at", "task_id")
    inlines = [ReportFlagInline]

    fieldsets = (
        ("Run", {
            "fields": ("scenario", "seed", "status", "out_dir", "task_id"),
        }),
        ("Configuration", {
            "fields": ("config",),
            "classes": ("collapse",),
        }),
        ("Results", {
            "fields": ("statistics", "error"),
        }),
        ("Timestamps", {
            "fields": ("created_at", "finished_at"),
            "classes": ("collapse",),
        }),
    )


@admin.register(ReportFlag)
class ReportFlagAdmin(admin.ModelAdmin):
    list_display = ("run", "name", "value", "comparison", "tolerance", "passed")
    list_filter = ("passed", "run__scenario")
    search_fields = ("name",)
