# Generated by Django 5.2.4 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('condition', 'condition'), ('sweep', 'trials sweep')], max_length=20)),
                ('name', models.CharField(max_length=200)),
                ('seed', models.BigIntegerField()),
                ('config', models.JSONField()),
                ('report', models.JSONField()),
                ('run_date', models.DateTimeField(auto_now_add=True, verbose_name='run')),
            ],
            options={
                'ordering': ['-run_date'],
            },
        ),
    ]
